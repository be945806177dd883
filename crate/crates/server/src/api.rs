use std::collections::BTreeMap;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fpwb_core::rewriter::{rule_infos, CandidateId, Provenance, RegimeConfig};
use fpwb_core::session::{build_spec, Source, SuggestOptions, Workbench};
use fpwb_core::{emit_fpcore, emit_latex, emit_math, parse_f64, parse_fpcore, parse_math, Expr, Spec, VarRange};
use serde::Deserialize;
use serde_json::json;

use crate::{ApiError, AppState};

type ApiResult<T = Response> = Result<T, ApiError>;
type Body<T> = Result<Json<T>, JsonRejection>;

/// A bound or coordinate: a JSON number, a decimal string, or a `0x` bit
/// pattern.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RangeValue {
    Number(f64),
    Text(String),
}

impl RangeValue {
    pub fn value(&self) -> ApiResult<f64> {
        match self {
            RangeValue::Number(v) => Ok(*v),
            RangeValue::Text(t) => {
                parse_f64(t).ok_or_else(|| ApiError::from(fpwb_core::Error::InvalidRange(format!("`{t}` is not a number"))))
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct RangeSpec {
    pub name: String,
    pub lo: RangeValue,
    pub hi: RangeValue,
}

fn ranges(specs: &[RangeSpec]) -> ApiResult<Vec<VarRange>> {
    specs.iter().map(|r| Ok(VarRange::new(r.name.clone(), r.lo.value()?, r.hi.value()?))).collect()
}

fn source(math: Option<String>, fpcore: Option<String>) -> ApiResult<Source> {
    match (math, fpcore) {
        (Some(m), None) => Ok(Source::Math(m)),
        (None, Some(f)) => Ok(Source::FpCore(f)),
        _ => Err(ApiError::bad_request("give exactly one of `math` and `fpcore`")),
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct CreateSession {
    #[serde(default, alias = "mathjson")]
    pub math: Option<String>,
    #[serde(default)]
    pub fpcore: Option<String>,
    #[serde(default)]
    pub ranges: Vec<RangeSpec>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct CandidateRequest {
    #[serde(default)]
    pub math: Option<String>,
    #[serde(default)]
    pub fpcore: Option<String>,
    /// Analyze without adding to the table.
    #[serde(default)]
    pub dry_run: bool,
}

#[derive(Clone, Debug, Deserialize)]
pub struct RangeRequest {
    pub ranges: Vec<RangeSpec>,
}

/// A point as values in variable order, or by variable name.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PointValues {
    List(Vec<RangeValue>),
    Named(BTreeMap<String, RangeValue>),
}

impl PointValues {
    fn resolve(&self, vars: &[String]) -> ApiResult<Vec<f64>> {
        let bad = |m: String| ApiError::from(fpwb_core::Error::InvalidPoint(m));
        match self {
            PointValues::List(vs) => vs.iter().map(RangeValue::value).collect(),
            PointValues::Named(map) => {
                if let Some(k) = map.keys().find(|k| !vars.contains(k)) {
                    return Err(bad(format!("unknown variable `{k}`")));
                }
                vars.iter()
                    .map(|v| map.get(v).ok_or_else(|| bad(format!("no value for `{v}`")))?.value())
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct LocalErrorRequest {
    pub point: PointValues,
}

#[derive(Clone, Debug, Deserialize)]
pub struct VisibilityRequest {
    pub visible: bool,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct SuggestRequest {
    #[serde(default)]
    pub start_cid: CandidateId,
    pub k: Option<usize>,
    pub beam: Option<usize>,
    pub depth: Option<usize>,
    pub budget_ms: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct RegimesRequest {
    pub candidates: Vec<CandidateId>,
    /// Defaults to the only variable.
    pub var: Option<String>,
    pub max_branches: Option<usize>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct TranslateRequest {
    pub direction: String,
    pub text: String,
    /// Ranges for the FPCore precondition when translating from math.
    #[serde(default)]
    pub ranges: Vec<RangeSpec>,
}

async fn run<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Workbench) -> fpwb_core::Result<T> + Send + 'static,
{
    let wb = state.workbench.clone();
    tokio::task::spawn_blocking(move || f(&wb))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

fn cid(text: &str) -> ApiResult<CandidateId> {
    text.parse().map_err(|_| fpwb_core::Error::NotFound { kind: "candidate", id: text.to_string() }.into())
}

pub async fn create_session(State(state): State<AppState>, body: Body<CreateSession>) -> ApiResult {
    let Json(req) = body?;
    let src = source(req.math, req.fpcore)?;
    let rs = ranges(&req.ranges)?;
    let seed = state.default_seed;
    let table = run(&state, move |wb| wb.create_session(build_spec(&src, &rs, req.n, req.seed, seed)?)).await?;
    Ok(Json(json!({ "session_id": table.session_id, "table": table })).into_response())
}

pub async fn table(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let t = run(&state, move |wb| wb.table(&id)).await?;
    Ok(Json(t).into_response())
}

pub async fn sample(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = run(&state, move |wb| wb.sample(&id)).await?;
    Ok(Json(&*s).into_response())
}

pub async fn stats(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let (session, cache) = run(&state, move |wb| Ok((wb.session_stats(&id)?, wb.cache_stats()))).await?;
    Ok(Json(json!({ "session": session, "cache": cache })).into_response())
}

fn candidate_expr(src: &Source) -> fpwb_core::Result<Expr> {
    match src {
        Source::Math(t) => parse_math(t),
        Source::FpCore(t) => Ok(parse_fpcore(t)?.expr),
    }
}

pub async fn add_candidate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Body<CandidateRequest>,
) -> ApiResult {
    let Json(req) = body?;
    let src = source(req.math, req.fpcore)?;
    let c = run(&state, move |wb| {
        let e = candidate_expr(&src)?;
        if req.dry_run {
            wb.preview_candidate(&id, e, Provenance::UserEntered)
        } else {
            wb.add_candidate(&id, e, Provenance::UserEntered)
        }
    })
    .await?;
    Ok(Json(json!({ "candidate": c })).into_response())
}

pub async fn set_range(State(state): State<AppState>, Path(id): Path<String>, body: Body<RangeRequest>) -> ApiResult {
    let Json(req) = body?;
    let rs = ranges(&req.ranges)?;
    let t = run(&state, move |wb| wb.set_range(&id, &rs)).await?;
    Ok(Json(json!({ "table": t })).into_response())
}

pub async fn errors(State(state): State<AppState>, Path((id, c)): Path<(String, String)>) -> ApiResult {
    let c = cid(&c)?;
    let r = run(&state, move |wb| wb.errors(&id, c)).await?;
    Ok(Json(r).into_response())
}

pub async fn local_error(
    State(state): State<AppState>,
    Path((id, c)): Path<(String, String)>,
    body: Body<LocalErrorRequest>,
) -> ApiResult {
    let Json(req) = body?;
    let c = cid(&c)?;
    let vars = run(&state, {
        let id = id.clone();
        move |wb| Ok(wb.sample(&id)?.vars.clone())
    })
    .await?;
    let point = req.point.resolve(&vars)?;
    let t = run(&state, move |wb| wb.local_error(&id, c, &point)).await?;
    Ok(Json(t).into_response())
}

pub async fn visibility(
    State(state): State<AppState>,
    Path((id, c)): Path<(String, String)>,
    body: Body<VisibilityRequest>,
) -> ApiResult {
    let Json(req) = body?;
    let c = cid(&c)?;
    let cand = run(&state, move |wb| wb.set_visible(&id, c, req.visible)).await?;
    Ok(Json(json!({ "candidate": cand })).into_response())
}

pub async fn suggest(State(state): State<AppState>, Path(id): Path<String>, body: Body<SuggestRequest>) -> ApiResult {
    let Json(req) = body?;
    let opts = SuggestOptions {
        k: req.k,
        beam: req.beam,
        depth: req.depth,
        budget: req.budget_ms.map(Duration::from_millis),
    };
    let jid = run(&state, move |wb| wb.run_suggest(&id, req.start_cid, &opts)).await?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": jid }))).into_response())
}

pub async fn regimes(State(state): State<AppState>, Path(id): Path<String>, body: Body<RegimesRequest>) -> ApiResult {
    let Json(req) = body?;
    let c = run(&state, move |wb| {
        let var = match req.var {
            Some(v) => v,
            None => {
                let vars = wb.sample(&id)?.vars.clone();
                match vars.as_slice() {
                    [v] => v.clone(),
                    _ => return Err(fpwb_core::Error::InvalidRange("name the variable to split on".into())),
                }
            }
        };
        let d = RegimeConfig::default();
        let cfg = RegimeConfig {
            max_branches: req.max_branches.unwrap_or(d.max_branches),
            lambda: req.lambda.unwrap_or(d.lambda),
        };
        wb.combine(&id, &req.candidates, &var, &cfg)
    })
    .await?;
    Ok(Json(json!({ "candidate": c })).into_response())
}

pub async fn poll_job(State(state): State<AppState>, Path(jid): Path<String>) -> ApiResult {
    let v = run(&state, move |wb| wb.poll_job(&jid)).await?;
    Ok(Json(v).into_response())
}

pub async fn cancel_job(State(state): State<AppState>, Path(jid): Path<String>) -> ApiResult {
    let v = run(&state, move |wb| wb.cancel_job(&jid)).await?;
    Ok(Json(v).into_response())
}

pub async fn rules() -> ApiResult {
    Ok(Json(json!({ "rules": rule_infos() })).into_response())
}

pub fn translate_text(direction: &str, text: &str, ranges: &[VarRange]) -> fpwb_core::Result<String> {
    let direction = direction.replace('→', "->");
    let (from, to) = direction
        .split_once("->")
        .ok_or_else(|| fpwb_core::Error::Unsupported(format!("direction `{direction}`")))?;
    let spec = match from.trim() {
        "math" => {
            let e = parse_math(text)?;
            Spec::unbounded(e)?.with_ranges(ranges)?
        }
        "fpcore" => parse_fpcore(text)?.with_ranges(ranges)?,
        other => return Err(fpwb_core::Error::Unsupported(format!("translating from `{other}`"))),
    };
    match to.trim() {
        "math" => Ok(emit_math(&spec.expr)),
        "fpcore" => Ok(emit_fpcore(&spec.expr, &spec)),
        "latex" => Ok(emit_latex(&spec.expr)),
        other => Err(fpwb_core::Error::Unsupported(format!("translating to `{other}`"))),
    }
}

pub async fn translate(body: Body<TranslateRequest>) -> ApiResult {
    let Json(req) = body?;
    let rs = ranges(&req.ranges)?;
    let text = translate_text(&req.direction, &req.text, &rs)?;
    Ok(Json(json!({ "text": text })).into_response())
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}
