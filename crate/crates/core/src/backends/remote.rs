use std::fs;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use image::RgbImage;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::wire::{self, *};
use super::{
    CaptionVqaBackend, DetectorTrainBackend, GroundedDetectorBackend, Grounding, KdSignal, LanguageBackend,
    TrainOutcome, TrainRequest, TrainStep, TrainingImage,
};
use crate::error::BackendError;
use crate::geometry::BBox;
use crate::labels::{dataset_to_coco_string, AnnotatedImage, Dataset};

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8500`.
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Extra attempts for idempotent calls after a transport failure.
    pub retries: u32,
    pub max_in_flight: usize,
    pub poll_interval_ms: u64,
    pub train_timeout_ms: u64,
    /// Where training sets are written for the gateway to read.
    pub staging_dir: PathBuf,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout_ms: 60_000,
            retries: 2,
            max_in_flight: 8,
            poll_interval_ms: 500,
            train_timeout_ms: 6 * 60 * 60 * 1000,
            staging_dir: std::env::temp_dir().join("attrikit-staging"),
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().expect("permit lock poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("permit lock poisoned");
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("permit lock poisoned") += 1;
        self.0.cv.notify_one();
    }
}

/// Client for the `/v1` model gateway; implements all four backend traits.
#[derive(Debug)]
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
    permits: Permits,
}

enum Method<'a, B> {
    Get,
    Post(&'a B),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let permits = Permits {
            free: Mutex::new(config.max_in_flight.max(1)),
            cv: Condvar::new(),
        };
        Self { config, agent, permits }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    fn map_transport(&self, e: ureq::Error) -> BackendError {
        match e {
            ureq::Error::Timeout(_) => BackendError::Timeout(self.config.timeout_ms),
            other => BackendError::Transport(other.to_string()),
        }
    }

    fn once<B: Serialize, R: DeserializeOwned>(&self, path: &str, method: &Method<'_, B>) -> Result<R, BackendError> {
        let _permit = self.permits.acquire();
        let url = self.url(path);
        let response = match method {
            Method::Get => self.agent.get(&url).call(),
            Method::Post(body) => self.agent.post(&url).send_json(body),
        };
        let mut response = response.map_err(|e| self.map_transport(e))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| self.map_transport(e))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::Schema(format!("{path}: response is not JSON: {e}")))?;

        if !(200..300).contains(&status) {
            return Err(match serde_json::from_value::<ErrorBody>(value) {
                Ok(body) if body.error.kind == "version_mismatch" => BackendError::VersionMismatch {
                    expected: PROTOCOL_VERSION.into(),
                    got: body.error.message,
                },
                Ok(body) => BackendError::Rejected {
                    status,
                    message: format!("{}: {}", body.error.kind, body.error.message),
                },
                Err(_) => BackendError::Rejected { status, message: text },
            });
        }
        let version = value.get("version").and_then(Value::as_str).unwrap_or("<missing>");
        wire::check_version(version)?;
        serde_json::from_value(value).map_err(|e| BackendError::Schema(format!("{path}: {e}")))
    }

    fn call<B: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        method: Method<'_, B>,
        idempotent: bool,
    ) -> Result<R, BackendError> {
        let attempts = if idempotent { self.config.retries + 1 } else { 1 };
        let mut last = None;
        for attempt in 0..attempts {
            match self.once(path, &method) {
                Err(e @ (BackendError::Transport(_) | BackendError::Timeout(_))) => {
                    last = Some(e);
                    if attempt + 1 < attempts {
                        thread::sleep(Duration::from_millis(50 << attempt.min(5)));
                    }
                }
                other => return other,
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn post<B: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
        idempotent: bool,
    ) -> Result<R, BackendError> {
        self.call(path, Method::Post(body), idempotent)
    }

    fn get<R: DeserializeOwned>(&self, path: &str) -> Result<R, BackendError> {
        self.call::<(), R>(path, Method::Get, true)
    }

    /// Writes the training images and pseudo labels where the gateway can
    /// read them; returns the `file://` URI of the COCO file.
    fn stage(&self, request: &TrainRequest<'_>) -> Result<String, BackendError> {
        let io = |e: std::io::Error| BackendError::Transport(format!("staging: {e}"));
        let coco =
            dataset_to_coco_string(&request.pseudo_labels.dataset).map_err(|e| BackendError::Schema(e.to_string()))?;
        let digest = Sha256::digest(coco.as_bytes());
        let tag: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        let dir = self.config.staging_dir.join(format!("train-{tag}"));
        fs::create_dir_all(dir.join("images")).map_err(io)?;

        let mut staged = Vec::new();
        for img in request.pseudo_labels.images() {
            let training = request
                .images
                .iter()
                .find(|t| t.image_id == img.image_id)
                .ok_or_else(|| BackendError::Training(format!("no image data for image {}", img.image_id)))?;
            let name = format!("images/{:06}.png", img.image_id);
            training
                .raster
                .save(dir.join(&name))
                .map_err(|e| BackendError::Transport(format!("staging: {e}")))?;
            staged.push(AnnotatedImage {
                file_name: name,
                crop: None,
                ..img.clone()
            });
        }
        let text =
            dataset_to_coco_string(&Dataset { images: staged }).map_err(|e| BackendError::Schema(e.to_string()))?;
        let path = dir.join("pseudo_labels.json");
        fs::write(&path, text).map_err(io)?;
        let abs = fs::canonicalize(&path).map_err(io)?;
        Ok(format!("file://{}", abs.display()))
    }
}

impl GroundedDetectorBackend for RemoteBackend {
    fn ground(&self, prompts: &[String], image: &TrainingImage) -> Result<Grounding, BackendError> {
        let req = GroundRequest::new(prompts.to_vec(), encode_image(&image.raster));
        let resp: GroundResponse = self.post("/v1/ground", &req, true)?;
        resp.into_grounding()
    }
}

impl CaptionVqaBackend for RemoteBackend {
    fn answer(&self, patch: &RgbImage, question: &str) -> Result<String, BackendError> {
        let req = VqaRequest::new(encode_image(patch), question.to_string());
        let resp: VqaResponse = self.post("/v1/vqa", &req, true)?;
        Ok(resp.answer)
    }
}

impl LanguageBackend for RemoteBackend {
    fn word_list(&self, query: &str) -> Result<Vec<String>, BackendError> {
        let resp: AugmentResponse = self.post("/v1/augment", &AugmentRequest::new(query.to_string()), true)?;
        Ok(resp.words)
    }
}

impl DetectorTrainBackend for RemoteBackend {
    fn train(&self, request: &TrainRequest<'_>) -> Result<TrainOutcome, BackendError> {
        let body = TrainRequestBody {
            version: PROTOCOL_VERSION.into(),
            dataset_uri: self.stage(request)?,
            alpha: request.alpha,
            kd: request.kd.wire_name().into(),
        };
        let accepted: TrainAccepted = self.post("/v1/train", &body, false)?;
        let started = Instant::now();
        loop {
            let status: TrainStatus = self.get(&format!("/v1/train/{}", accepted.job_id))?;
            status.validate()?;
            match status.state {
                JobState::Done => {
                    let steps = status
                        .losses
                        .into_iter()
                        .map(|l| TrainStep {
                            step: l.step,
                            l_det: l.l_det,
                            kd: KdSignal::Reported(l.l_kd),
                        })
                        .collect();
                    return Ok(TrainOutcome {
                        job_id: accepted.job_id,
                        steps,
                    });
                }
                JobState::Failed => {
                    return Err(BackendError::Training(
                        status.error.unwrap_or_else(|| "gateway reported failure".into()),
                    ))
                }
                JobState::Queued | JobState::Running => {
                    if started.elapsed() > Duration::from_millis(self.config.train_timeout_ms) {
                        return Err(BackendError::Timeout(self.config.train_timeout_ms));
                    }
                    thread::sleep(Duration::from_millis(self.config.poll_interval_ms));
                }
            }
        }
    }

    fn predict(&self, job_id: &str, image: &TrainingImage) -> Result<Vec<BBox>, BackendError> {
        let req = PredictRequest::new(job_id.to_string(), encode_image(&image.raster));
        let resp: PredictResponse = self.post("/v1/predict", &req, true)?;
        boxes_from_wire(&resp.boxes)
    }
}
