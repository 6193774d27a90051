#![allow(dead_code)]

use std::sync::OnceLock;

use halotouch::calib::{run_calibration, train_pilot_corrector, CalibrationOptions, CalibrationProfile, PilotConfig};
use halotouch::depthio::DepthFrame;
use halotouch::gbrt::{GbrtConfig, GbrtModel};
use halotouch::geometry::CameraModel;
use halotouch::halocore::LandmarkFrame;
use halotouch::mpisim::scripts::{calibration_session, FPS};
use halotouch::mpisim::{render_trajectory, GroundTruthRecord, MaterialProfile, SceneSpec, Script};
use halotouch::pipeline::{run_stream, PipelineConfig, RunOutput};

pub struct Session {
    pub frames: Vec<DepthFrame>,
    pub landmarks: Vec<LandmarkFrame>,
    pub truth: Vec<GroundTruthRecord>,
    pub camera: CameraModel,
}

pub fn scene(material: &str) -> SceneSpec {
    SceneSpec::default().with_size(256, 256).with_material(MaterialProfile::preset(material).unwrap())
}

pub fn render(scene: &SceneSpec, script: &Script, seed: u64) -> Session {
    let traj = render_trajectory(scene, script, FPS, seed).unwrap();
    let camera = traj.renderer().camera().clone();
    let mut s = Session { frames: Vec::new(), landmarks: Vec::new(), truth: Vec::new(), camera };
    for f in traj {
        let f = f.unwrap();
        s.frames.push(f.frame);
        s.landmarks.extend(f.landmarks);
        s.truth.push(f.truth);
    }
    s
}

/// The generic corrector, trained once per test binary.
pub fn pilot() -> &'static GbrtModel {
    static PILOT: OnceLock<GbrtModel> = OnceLock::new();
    PILOT.get_or_init(|| train_pilot_corrector(&PilotConfig::default(), &GbrtConfig::default()).unwrap().0)
}

/// Calibrates on the standard session at 45 deg pitch.
pub fn calibrate(scene: &SceneSpec) -> CalibrationProfile {
    let script = calibration_session(45.0, 270.0, true, 0);
    let s = render(scene, &script, 0);
    let frames = s.frames.into_iter().map(Ok::<_, String>);
    let opts = CalibrationOptions { material: scene.material.name.clone(), ..CalibrationOptions::default() };
    run_calibration(frames, &s.landmarks, &s.camera, &script.segments, pilot(), &opts).unwrap().0
}

pub fn run(session: &Session, profile: &CalibrationProfile) -> RunOutput {
    run_stream(
        session.frames.iter().cloned(),
        &session.landmarks,
        profile.clone(),
        session.camera.clone(),
        PipelineConfig::default(),
    )
    .unwrap()
}
