//! In-process `/v1` gateway backed by the mocks.
//!
//! The wire carries pixels only, so the gateway is told the scenes up front
//! and recovers each one by comparing rasters.

// Handlers short-circuit with ready-made error responses.
#![allow(clippy::result_large_err)]

use std::collections::HashMap;
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use attrikit::backends::wire::*;
use attrikit::backends::{
    CaptionVqaBackend, DetectorTrainBackend, GroundedDetectorBackend, LanguageBackend, MockGroundedDetector,
    MockLanguageModel, MockStudentTrainer, MockVqa, TrainRequest, TrainingImage,
};
use attrikit::labels::{load_coco, LabelSource, PseudoLabelSet};
use attrikit::skd::reduce_kd;
use attrikit::KdReduction;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use image::RgbImage;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub struct GatewayState {
    scenes: Vec<TrainingImage>,
    detector: MockGroundedDetector,
    language: MockLanguageModel,
    student: MockStudentTrainer,
    jobs: Mutex<HashMap<String, TrainStatus>>,
    /// Version stamped on every response.
    response_version: String,
    /// Requests that reached a model.
    pub model_calls: AtomicUsize,
}

pub struct Gateway {
    pub url: String,
    pub state: Arc<GatewayState>,
    runtime: Option<tokio::runtime::Runtime>,
}

impl Drop for Gateway {
    fn drop(&mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

type Reply = Result<Response, Response>;

fn error(status: StatusCode, kind: &str, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody::new(kind, message))).into_response()
}

fn internal(e: impl std::fmt::Display) -> Response {
    error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
}

/// Version first, then the typed schema; nothing reaches a model before both pass.
fn parse<T: DeserializeOwned>(body: Value) -> Result<T, Response> {
    let version = body.get("version").and_then(Value::as_str).unwrap_or("<missing>");
    if version != PROTOCOL_VERSION {
        return Err(error(StatusCode::BAD_REQUEST, "version_mismatch", version.to_string()));
    }
    serde_json::from_value(body).map_err(|e| error(StatusCode::BAD_REQUEST, "validation", e.to_string()))
}

impl GatewayState {
    fn reply<T: Serialize>(&self, value: &T) -> Reply {
        let mut v = serde_json::to_value(value).map_err(internal)?;
        v["version"] = Value::String(self.response_version.clone());
        Ok(Json(v).into_response())
    }

    fn lookup(&self, raster: &RgbImage) -> Result<TrainingImage, Response> {
        self.scenes
            .iter()
            .find(|s| *s.raster == *raster)
            .cloned()
            .ok_or_else(|| error(StatusCode::NOT_FOUND, "not_found", "unknown image"))
    }

    fn image(&self, b64: &str) -> Result<RgbImage, Response> {
        decode_image(b64).map_err(|e| error(StatusCode::BAD_REQUEST, "validation", e.to_string()))
    }

    fn train(&self, body: &TrainRequestBody) -> Result<(String, TrainStatus), String> {
        let kd = KdReduction::from_wire(&body.kd).ok_or_else(|| format!("unknown kd {}", body.kd))?;
        let path = body
            .dataset_uri
            .strip_prefix("file://")
            .ok_or("dataset_uri must be file://")?;
        let path = Path::new(path);
        let dataset = load_coco(path).map_err(|e| e.to_string())?;
        let root = path.parent().ok_or("dataset has no directory")?;
        let mut images = Vec::new();
        for img in &dataset.images {
            let raster = image::open(root.join(&img.file_name))
                .map_err(|e| e.to_string())?
                .to_rgb8();
            let known = self
                .scenes
                .iter()
                .find(|s| *s.raster == raster)
                .ok_or("unknown image")?;
            images.push(TrainingImage {
                image_id: img.image_id,
                ..known.clone()
            });
        }
        let labels = PseudoLabelSet {
            dataset,
            round_index: 0,
            source: LabelSource::Teacher,
        };
        let request = TrainRequest {
            pseudo_labels: &labels,
            images: &images,
            alpha: body.alpha,
            kd,
        };
        let outcome = self.student.train(&request).map_err(|e| e.to_string())?;
        let losses = outcome
            .steps
            .iter()
            .map(|s| {
                Ok(LossRecord {
                    step: s.step,
                    l_det: s.l_det,
                    l_kd: reduce_kd(&s.kd, kd)?,
                })
            })
            .collect::<attrikit::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let status = TrainStatus {
            version: PROTOCOL_VERSION.into(),
            state: JobState::Done,
            losses,
            error: None,
        };
        Ok((outcome.job_id, status))
    }
}

async fn ground(State(s): State<Arc<GatewayState>>, Json(body): Json<Value>) -> Reply {
    let req: GroundRequest = parse(body)?;
    let image = s.lookup(&s.image(&req.image_b64)?)?;
    s.model_calls.fetch_add(1, Ordering::SeqCst);
    let g = s.detector.ground(&req.prompts, &image).map_err(internal)?;
    s.reply(&GroundResponse::from_grounding(&g))
}

async fn vqa(State(s): State<Arc<GatewayState>>, Json(body): Json<Value>) -> Reply {
    let req: VqaRequest = parse(body)?;
    let patch = s.image(&req.image_b64)?;
    s.model_calls.fetch_add(1, Ordering::SeqCst);
    let answer = MockVqa.answer(&patch, &req.question).map_err(internal)?;
    s.reply(&VqaResponse {
        version: PROTOCOL_VERSION.into(),
        answer,
    })
}

async fn augment(State(s): State<Arc<GatewayState>>, Json(body): Json<Value>) -> Reply {
    let req: AugmentRequest = parse(body)?;
    s.model_calls.fetch_add(1, Ordering::SeqCst);
    let words = s.language.word_list(&req.query).map_err(internal)?;
    s.reply(&AugmentResponse {
        version: PROTOCOL_VERSION.into(),
        words,
    })
}

async fn train(State(s): State<Arc<GatewayState>>, Json(body): Json<Value>) -> Reply {
    let req: TrainRequestBody = parse(body)?;
    s.model_calls.fetch_add(1, Ordering::SeqCst);
    let (job_id, status) = match s.train(&req) {
        Ok(done) => done,
        Err(message) => {
            let id = format!("failed-{}", s.jobs.lock().unwrap().len());
            let status = TrainStatus {
                version: PROTOCOL_VERSION.into(),
                state: JobState::Failed,
                losses: Vec::new(),
                error: Some(message),
            };
            (id, status)
        }
    };
    s.jobs.lock().unwrap().insert(job_id.clone(), status);
    s.reply(&TrainAccepted {
        version: PROTOCOL_VERSION.into(),
        job_id,
    })
}

async fn train_status(State(s): State<Arc<GatewayState>>, UrlPath(id): UrlPath<String>) -> Reply {
    let status = s.jobs.lock().unwrap().get(&id).cloned();
    match status {
        Some(st) => s.reply(&st),
        None => Err(error(StatusCode::NOT_FOUND, "not_found", format!("job {id}"))),
    }
}

async fn predict(State(s): State<Arc<GatewayState>>, Json(body): Json<Value>) -> Reply {
    let req: PredictRequest = parse(body)?;
    let image = s.lookup(&s.image(&req.image_b64)?)?;
    s.model_calls.fetch_add(1, Ordering::SeqCst);
    let boxes = s
        .student
        .predict(&req.job_id, &image)
        .map_err(|e| error(StatusCode::NOT_FOUND, "not_found", e.to_string()))?;
    s.reply(&PredictResponse {
        version: PROTOCOL_VERSION.into(),
        boxes: boxes.iter().map(WireBox::from).collect(),
    })
}

impl Gateway {
    pub fn start(scenes: Vec<TrainingImage>) -> Self {
        Self::start_with_version(scenes, PROTOCOL_VERSION)
    }

    /// A gateway that stamps `version` on its responses.
    pub fn start_with_version(scenes: Vec<TrainingImage>, version: &str) -> Self {
        let state = Arc::new(GatewayState {
            scenes,
            detector: MockGroundedDetector::default(),
            language: MockLanguageModel::default(),
            student: MockStudentTrainer::default(),
            jobs: Mutex::new(HashMap::new()),
            response_version: version.to_string(),
            model_calls: AtomicUsize::new(0),
        });
        let app = Router::new()
            .route("/v1/ground", post(ground))
            .route("/v1/vqa", post(vqa))
            .route("/v1/augment", post(augment))
            .route("/v1/train", post(train))
            .route("/v1/train/{id}", get(train_status))
            .route("/v1/predict", post(predict))
            .with_state(state.clone());

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        runtime.spawn(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
        Self {
            url,
            state,
            runtime: Some(runtime),
        }
    }

    pub fn model_calls(&self) -> usize {
        self.state.model_calls.load(Ordering::SeqCst)
    }
}
