use attrikit::backends::{
    CaptionVqaBackend, DetectorTrainBackend, GroundedDetectorBackend, LanguageBackend, MockGroundedDetector,
    MockLanguageModel, MockStudentTrainer, MockVqa, RemoteBackend, RemoteConfig,
};

use crate::config::{BackendKind, RunConfig};

/// The backends a run talks to: all mocks, or one gateway client for all.
pub enum Backends {
    Mock {
        detector: MockGroundedDetector,
        lm: MockLanguageModel,
        student: MockStudentTrainer,
    },
    Remote(RemoteBackend),
}

impl Backends {
    /// Expects a validated config.
    pub fn from_config(cfg: &RunConfig) -> Self {
        match cfg.backend {
            BackendKind::Mock => Backends::Mock {
                detector: MockGroundedDetector::default(),
                lm: MockLanguageModel::default(),
                student: MockStudentTrainer::default(),
            },
            BackendKind::Remote => {
                let mut rc = RemoteConfig::new(cfg.endpoint.clone().unwrap_or_default());
                rc.timeout_ms = cfg.remote.timeout_ms;
                rc.retries = cfg.remote.retries;
                rc.max_in_flight = cfg.remote.max_in_flight;
                rc.poll_interval_ms = cfg.remote.poll_interval_ms;
                Backends::Remote(RemoteBackend::new(rc))
            }
        }
    }

    pub fn detector(&self) -> &dyn GroundedDetectorBackend {
        match self {
            Backends::Mock { detector, .. } => detector,
            Backends::Remote(r) => r,
        }
    }

    pub fn vqa(&self) -> &dyn CaptionVqaBackend {
        match self {
            Backends::Mock { .. } => &MockVqa,
            Backends::Remote(r) => r,
        }
    }

    pub fn language(&self) -> &dyn LanguageBackend {
        match self {
            Backends::Mock { lm, .. } => lm,
            Backends::Remote(r) => r,
        }
    }

    pub fn trainer(&self) -> &dyn DetectorTrainBackend {
        match self {
            Backends::Mock { student, .. } => student,
            Backends::Remote(r) => r,
        }
    }
}
