use std::fmt;
use std::io::{Read, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{mean, EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KeyInput {
    Char(char),
    Backspace,
}

impl KeyInput {
    fn label(&self) -> String {
        match self {
            KeyInput::Char(' ') => "space".into(),
            KeyInput::Char(c) => c.to_string(),
            KeyInput::Backspace => "backspace".into(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "space" => Some(KeyInput::Char(' ')),
            "backspace" => Some(KeyInput::Backspace),
            _ => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Some(KeyInput::Char(c)),
                    _ => None,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Keystroke {
    pub timestamp_ms: f64,
    pub key: KeyInput,
}

/// Text left by a keystroke sequence.
pub fn replay(keys: &[Keystroke]) -> String {
    let mut out = String::new();
    for k in keys {
        match k.key {
            KeyInput::Char(c) => out.push(c),
            KeyInput::Backspace => {
                out.pop();
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypingTrial {
    pub reference: String,
    pub input: String,
    pub keystrokes: Vec<Keystroke>,
}

impl TypingTrial {
    pub fn from_keystrokes(reference: impl Into<String>, keystrokes: Vec<Keystroke>) -> Self {
        Self { reference: reference.into(), input: replay(&keystrokes), keystrokes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceRow {
    pub index: usize,
    pub chars: usize,
    pub seconds: f64,
    pub wpm: f64,
    pub accuracy: f64,
    pub awpm: f64,
    pub uncorrected_errors: usize,
    pub corrected_errors: usize,
    /// Denominator of the error rates: the longer of reference and input.
    pub total_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypingReport {
    /// Means over sentences.
    pub wpm: f64,
    pub accuracy: f64,
    /// `wpm * accuracy`.
    pub awpm: f64,
    /// Error counts pooled over sentences.
    pub uer: f64,
    pub cer: f64,
    pub sentences: Vec<SentenceRow>,
}

impl fmt::Display for TypingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "typing over {} sentences", self.sentences.len())?;
        writeln!(f, "  accuracy aligns words by position; missing or extra words count as all-wrong")?;
        write!(
            f,
            "  WPM {:.2}  accuracy {:.4}  AWPM {:.2}  UER {:.2}%  CER {:.2}%",
            self.wpm,
            self.accuracy,
            self.awpm,
            100.0 * self.uer,
            100.0 * self.cer
        )
    }
}

/// Character accuracy of `input` against `reference`, compared word by word.
/// Words pair up by position; each pair scores its edit distance against
/// the longer word's length.
fn word_accuracy(reference: &str, input: &str) -> f64 {
    let r: Vec<&str> = reference.split_whitespace().collect();
    let t: Vec<&str> = input.split_whitespace().collect();
    let (mut errors, mut total) = (0usize, 0usize);
    for i in 0..r.len().max(t.len()) {
        let a = r.get(i).copied().unwrap_or("");
        let b = t.get(i).copied().unwrap_or("");
        total += a.chars().count().max(b.chars().count());
        errors += strsim::levenshtein(a, b);
    }
    if total == 0 {
        1.0
    } else {
        1.0 - errors as f64 / total as f64
    }
}

/// Backspaces that removed a character.
fn corrections(keys: &[Keystroke]) -> usize {
    let mut len = 0usize;
    let mut n = 0;
    for k in keys {
        match k.key {
            KeyInput::Char(_) => len += 1,
            KeyInput::Backspace if len > 0 => {
                len -= 1;
                n += 1;
            }
            KeyInput::Backspace => {}
        }
    }
    n
}

/// Speed and error rates. Words per minute count five characters of the
/// final input per word over the time from first to last keystroke.
/// Uncorrected errors are the edit distance left in the input; corrected
/// errors are characters erased with backspace.
pub fn typing_metrics(trials: &[TypingTrial]) -> Result<TypingReport> {
    if trials.is_empty() {
        return Err(EvalError::Empty("typing trials"));
    }
    let mut rows = Vec::with_capacity(trials.len());
    for (i, t) in trials.iter().enumerate() {
        let bad = |message: String| EvalError::Inconsistent { sentence: i, message };
        if t.keystrokes.len() < 2 {
            return Err(bad("needs at least two keystrokes".into()));
        }
        if replay(&t.keystrokes) != t.input {
            return Err(bad("keystrokes do not produce the input text".into()));
        }
        let first = t.keystrokes[0].timestamp_ms;
        let last = t.keystrokes[t.keystrokes.len() - 1].timestamp_ms;
        if !(last > first) {
            return Err(bad("keystroke times do not advance".into()));
        }
        let seconds = (last - first) / 1000.0;
        let chars = t.input.chars().count();
        let wpm = chars as f64 / 5.0 / (seconds / 60.0);
        let accuracy = word_accuracy(&t.reference, &t.input);
        rows.push(SentenceRow {
            index: i,
            chars,
            seconds,
            wpm,
            accuracy,
            awpm: wpm * accuracy,
            uncorrected_errors: strsim::levenshtein(&t.reference, &t.input),
            corrected_errors: corrections(&t.keystrokes),
            total_chars: t.reference.chars().count().max(chars),
        });
    }
    let wpm = mean(&rows.iter().map(|r| r.wpm).collect::<Vec<_>>());
    let accuracy = mean(&rows.iter().map(|r| r.accuracy).collect::<Vec<_>>());
    let total: usize = rows.iter().map(|r| r.total_chars).sum();
    let rate = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    Ok(TypingReport {
        wpm,
        accuracy,
        awpm: wpm * accuracy,
        uer: rate(rows.iter().map(|r| r.uncorrected_errors).sum()),
        cer: rate(rows.iter().map(|r| r.corrected_errors).sum()),
        sentences: rows,
    })
}

/// One phrase per line; blank lines are skipped and whitespace is trimmed.
pub fn load_phrases(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
}

/// `n` distinct phrases in random order (all of them if `n` exceeds the set).
pub fn sample_phrases(phrases: &[String], n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    index::sample(&mut rng, phrases.len(), n.min(phrases.len())).into_iter().map(|i| phrases[i].clone()).collect()
}

/// Writes the `sentence,timestamp_ms,key` keystroke log.
pub fn write_keystrokes<W: Write>(sink: W, sentences: &[Vec<Keystroke>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["sentence", "timestamp_ms", "key"])?;
    for (i, keys) in sentences.iter().enumerate() {
        for k in keys {
            w.write_record([i.to_string(), k.timestamp_ms.to_string(), k.key.label()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a keystroke log back into per-sentence sequences. Sentence indices
/// must start at 0 and never decrease.
pub fn read_keystrokes<R: Read>(source: R) -> Result<Vec<Vec<Keystroke>>> {
    let mut r = csv::Reader::from_reader(source);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["sentence", "timestamp_ms", "key"] {
        return Err(EvalError::Schema(format!("keystroke log header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out: Vec<Vec<Keystroke>> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| EvalError::Schema(format!("keystroke row {}: {what}", line + 1));
        let sentence: usize = rec[0].parse().map_err(|_| bad("sentence"))?;
        let timestamp_ms: f64 = rec[1].parse().map_err(|_| bad("timestamp_ms"))?;
        let key = KeyInput::parse(&rec[2]).ok_or_else(|| bad("key"))?;
        if sentence + 1 < out.len() || sentence > out.len() {
            return Err(bad("sentence out of order"));
        }
        if sentence == out.len() {
            out.push(Vec::new());
        }
        out[sentence].push(Keystroke { timestamp_ms, key });
    }
    if out.is_empty() {
        return Err(EvalError::Empty("keystroke log"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn typed(text: &str, start: f64, step: f64) -> Vec<Keystroke> {
        text.chars().enumerate().map(|(i, c)| Keystroke { timestamp_ms: start + i as f64 * step, key: KeyInput::Char(c) }).collect()
    }

    #[test]
    fn sixty_chars_in_twenty_four_seconds() {
        let text = "abcdefghij".repeat(6);
        let keys = typed(&text, 0.0, 24000.0 / 59.0);
        let r = typing_metrics(&[TypingTrial::from_keystrokes(text.clone(), keys)]).unwrap();
        assert!((r.wpm - 30.0).abs() < 1e-9);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.awpm, r.wpm);
        assert_eq!((r.uer, r.cer), (0.0, 0.0));
    }

    #[test]
    fn two_uncorrected_one_corrected_in_fifty() {
        let reference = "the quick brown fox jumps over the lazy dog again!";
        assert_eq!(reference.len(), 50);
        let mut input: Vec<char> = reference.chars().collect();
        input[4] = 'x';
        input[20] = 'z';
        let mut keys = Vec::new();
        let mut t = 0.0;
        for (i, &c) in input.iter().enumerate() {
            if i == 10 {
                keys.push(Keystroke { timestamp_ms: t, key: KeyInput::Char('q') });
                keys.push(Keystroke { timestamp_ms: t + 100.0, key: KeyInput::Backspace });
                t += 200.0;
            }
            keys.push(Keystroke { timestamp_ms: t, key: KeyInput::Char(c) });
            t += 200.0;
        }
        let trial = TypingTrial::from_keystrokes(reference, keys);
        assert_eq!(trial.input, input.iter().collect::<String>());
        let r = typing_metrics(&[trial]).unwrap();
        assert_eq!(r.uer, 0.04);
        assert_eq!(r.cer, 0.02);
    }

    #[test]
    fn word_alignment_pads_missing_words() {
        assert_eq!(word_accuracy("hello world", "hello"), 0.5);
        assert_eq!(word_accuracy("abcd", "abed"), 0.75);
        assert_eq!(word_accuracy("", ""), 1.0);
    }

    #[test]
    fn replay_applies_backspace() {
        let mut keys = typed("abx", 0.0, 1.0);
        keys.push(Keystroke { timestamp_ms: 3.0, key: KeyInput::Backspace });
        keys.push(Keystroke { timestamp_ms: 4.0, key: KeyInput::Char('c') });
        assert_eq!(replay(&keys), "abc");
        assert_eq!(corrections(&keys), 1);
    }

    #[test]
    fn inconsistent_input_rejected() {
        let t = TypingTrial { reference: "ab".into(), input: "ac".into(), keystrokes: typed("ab", 0.0, 1.0) };
        assert!(matches!(typing_metrics(&[t]), Err(EvalError::Inconsistent { sentence: 0, .. })));
        assert!(matches!(typing_metrics(&[]), Err(EvalError::Empty(_))));
    }

    #[test]
    fn keystroke_log_round_trip() {
        let mut a = typed("hi there", 0.0, 150.0);
        a.push(Keystroke { timestamp_ms: 2000.0, key: KeyInput::Backspace });
        let logs = vec![a, typed("ok", 10.5, 99.25)];
        let mut buf = Vec::new();
        write_keystrokes(&mut buf, &logs).unwrap();
        assert_eq!(read_keystrokes(&buf[..]).unwrap(), logs);
    }

    #[test]
    fn phrase_sampling_is_seeded() {
        let phrases = load_phrases("one\n\n two \nthree\nfour\n");
        assert_eq!(phrases, ["one", "two", "three", "four"]);
        let a = sample_phrases(&phrases, 3, 7);
        assert_eq!(a, sample_phrases(&phrases, 3, 7));
        assert_eq!(a.len(), 3);
        assert_eq!(sample_phrases(&phrases, 10, 1).len(), 4);
    }
}
