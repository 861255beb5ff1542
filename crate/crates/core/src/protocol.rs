//! Newline-delimited JSON protocol for driving environments from another process.
//!
//! Each request is one JSON object on one line; each gets exactly one response
//! line. `id` (any JSON value) is echoed back. Unknown fields are ignored.
//!
//! | request    | response     |
//! |------------|--------------|
//! | `hello`    | `hello`      |
//! | `reset`    | `obs`        |
//! | `obs`      | `obs`        |
//! | `step`     | `transition` |
//! | `close`    | `close`      |
//! | `batch`    | `batch`      |
//! | malformed  | `error`      |
//!
//! A session owns one environment; `batch` requests address extra
//! environments in the same session by `env` index, which lets a learner step
//! several environments per round trip. The full schema ships as
//! `schemas/protocol-v1.json`.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::str::FromStr;
use std::thread;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::env::{
    Env, LongAgentSpec, ObservationLayout, ShortAction, StepInfo, StepInput,
};
use crate::error::{Error, Result};
use crate::traffic::Target;

pub const PROTOCOL_VERSION: u32 = 1;
/// Upper bound on environments per session reachable through `batch`.
pub const MAX_BATCH_ENVS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Stdio,
    Tcp(String),
}

impl FromStr for Endpoint {
    type Err = Error;

    /// `stdio`, `tcp:<port>` (binds 127.0.0.1) or `tcp:<host>:<port>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "stdio" {
            return Ok(Self::Stdio);
        }
        match s.strip_prefix("tcp:") {
            Some(rest) if rest.parse::<u16>().is_ok() => Ok(Self::Tcp(format!("127.0.0.1:{rest}"))),
            Some(rest) if rest.rsplit_once(':').is_some_and(|(_, p)| p.parse::<u16>().is_ok()) => {
                Ok(Self::Tcp(rest.to_string()))
            }
            _ => Err(Error::InvalidConfig(format!(
                "bad endpoint `{s}` (expected stdio, tcp:<port> or tcp:<host>:<port>)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortAgentInfo {
    pub id: usize,
    pub n_candidates: usize,
    pub sched_limit: usize,
    pub action_dim: usize,
    pub layout: ObservationLayout,
}

#[derive(Debug, Clone, Serialize)]
pub struct LongAgentInfo {
    pub id: usize,
    pub action_dim: usize,
    pub v_max: f64,
    pub layout: ObservationLayout,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hello {
    pub protocol_version: u32,
    pub config_hash: String,
    pub long_block: u64,
    pub episode_len: u64,
    pub short_agents: Vec<ShortAgentInfo>,
    pub long_agents: Vec<LongAgentInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObsPayload {
    pub slot: u64,
    pub done: bool,
    /// True when the next `step` must carry `long`.
    pub long_required: bool,
    /// Candidate targets per short agent, in observation order.
    pub candidates: Vec<Vec<Target>>,
    /// Non-empty-buffer indicator per candidate.
    pub eligible: Vec<Vec<bool>>,
    pub short: Vec<Vec<f64>>,
    /// Present when `long_required`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub long: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LongPayload {
    pub rewards: Vec<f64>,
    pub global_reward: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionPayload {
    pub slot: u64,
    pub schedule: Vec<Vec<bool>>,
    pub short_rewards: Vec<f64>,
    pub global_short_reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub long: Option<LongPayload>,
    pub done: bool,
    pub obs: ObsPayload,
    pub info: StepInfo,
}

#[derive(Debug, Deserialize)]
struct ResetReq {
    seed: u64,
}

#[derive(Debug, Deserialize)]
struct StepReq {
    short: Vec<ShortAction>,
    #[serde(default)]
    long: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
struct BatchReq {
    requests: Vec<Value>,
}

fn hello(env: &Env) -> Hello {
    let cfg = env.config();
    Hello {
        protocol_version: PROTOCOL_VERSION,
        config_hash: cfg.hash(),
        long_block: cfg.long_block,
        episode_len: cfg.episode_len,
        short_agents: env
            .short_agents()
            .iter()
            .map(|a| {
                let n = a.layout.field("prev_action").map_or(0, |f| f.len);
                ShortAgentInfo {
                    id: a.uav,
                    n_candidates: n,
                    sched_limit: a.sched_limit,
                    action_dim: n,
                    layout: a.layout.clone(),
                }
            })
            .collect(),
        long_agents: env
            .long_agents()
            .iter()
            .map(|a: &LongAgentSpec| LongAgentInfo {
                id: a.node,
                action_dim: 2,
                v_max: cfg.v_d_max,
                layout: a.layout.clone(),
            })
            .collect(),
    }
}

fn obs_payload(env: &Env) -> Result<ObsPayload> {
    let obs = env.observations().ok_or(Error::NotReset)?;
    let long_required = env.expects_long_action();
    Ok(ObsPayload {
        slot: env.slot().expect("reset"),
        done: env.is_done(),
        long_required,
        candidates: env.short_agents().iter().map(|a| a.candidates.clone()).collect(),
        eligible: env.eligibility().expect("reset"),
        short: obs.short.iter().map(|o| o.to_flat()).collect(),
        long: long_required.then(|| obs.long.iter().map(|o| o.to_flat()).collect()),
    })
}

fn field<'a>(msg: &'a Value, name: &str) -> Option<&'a Value> {
    msg.as_object().and_then(|o| o.get(name))
}

fn parse<T: serde::de::DeserializeOwned>(msg: &Value) -> Result<T> {
    T::deserialize(msg).map_err(|e| Error::BadRequest(e.to_string()))
}

/// One client's protocol state.
pub struct Session {
    cfg: ScenarioConfig,
    envs: Vec<Env>,
    closed: bool,
}

impl Session {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        let env = Env::new(cfg.clone())?;
        Ok(Self {
            cfg,
            envs: vec![env],
            closed: false,
        })
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Handles one request line and returns the response line (no newline).
    pub fn handle_line(&mut self, line: &str) -> String {
        let response = match serde_json::from_str::<Value>(line) {
            Ok(msg) => self.handle(&msg, 0),
            Err(e) => error_response(Value::Null, &Error::BadRequest(e.to_string())),
        };
        serde_json::to_string(&response).expect("responses serialize")
    }

    fn handle(&mut self, msg: &Value, default_env: usize) -> Value {
        let id = field(msg, "id").cloned().unwrap_or(Value::Null);
        match self.dispatch(msg, default_env) {
            Ok((kind, body)) => {
                let mut out = serde_json::Map::new();
                out.insert("type".into(), Value::from(kind));
                out.insert("id".into(), id);
                if let Value::Object(fields) = body {
                    out.extend(fields);
                }
                Value::Object(out)
            }
            Err(e) => error_response(id, &e),
        }
    }

    fn env_mut(&mut self, index: usize) -> Result<&mut Env> {
        if index >= MAX_BATCH_ENVS {
            return Err(Error::BadRequest(format!("env index {index} exceeds {MAX_BATCH_ENVS}")));
        }
        while self.envs.len() <= index {
            self.envs.push(Env::new(self.cfg.clone())?);
        }
        Ok(&mut self.envs[index])
    }

    fn dispatch(&mut self, msg: &Value, default_env: usize) -> Result<(&'static str, Value)> {
        let kind = field(msg, "type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::BadRequest("missing string field `type`".into()))?;
        let index = match field(msg, "env") {
            None => default_env,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| Error::BadRequest("`env` must be a non-negative integer".into()))?
                as usize,
        };
        match kind {
            "hello" => Ok(("hello", serde_json::to_value(hello(self.env_mut(index)?))?)),
            "reset" => {
                let req: ResetReq = parse(msg)?;
                let env = self.env_mut(index)?;
                env.reset(req.seed)?;
                Ok(("obs", serde_json::to_value(obs_payload(env)?)?))
            }
            "obs" => Ok(("obs", serde_json::to_value(obs_payload(self.env_mut(index)?)?)?)),
            "step" => {
                let req: StepReq = parse(msg)?;
                let env = self.env_mut(index)?;
                let t = env.step(&StepInput {
                    short: req.short,
                    long: req.long,
                })?;
                let payload = TransitionPayload {
                    slot: t.slot,
                    schedule: t.schedule.into_iter().map(|d| d.mask).collect(),
                    short_rewards: t.short_rewards,
                    global_short_reward: t.global_short_reward,
                    long: t.long.map(|l| LongPayload {
                        rewards: l.rewards,
                        global_reward: l.global_reward,
                    }),
                    done: t.done,
                    obs: obs_payload(env)?,
                    info: t.info,
                };
                Ok(("transition", serde_json::to_value(payload)?))
            }
            "close" => {
                self.closed = true;
                Ok(("close", Value::Object(Default::default())))
            }
            "batch" => {
                let req: BatchReq = parse(msg)?;
                let mut responses = Vec::with_capacity(req.requests.len());
                for (i, inner) in req.requests.iter().enumerate() {
                    if field(inner, "type").and_then(Value::as_str) == Some("batch") {
                        responses.push(error_response(
                            field(inner, "id").cloned().unwrap_or(Value::Null),
                            &Error::BadRequest("nested batch".into()),
                        ));
                    } else {
                        responses.push(self.handle(inner, i));
                    }
                }
                Ok(("batch", serde_json::json!({ "responses": responses })))
            }
            other => Err(Error::BadRequest(format!("unknown message type `{other}`"))),
        }
    }
}

fn error_response(id: Value, e: &Error) -> Value {
    serde_json::json!({
        "type": "error",
        "id": id,
        "code": e.code(),
        "message": e.to_string(),
    })
}

/// Runs a session over any line-oriented reader/writer pair until `close` or EOF.
pub fn serve_stream<R: BufRead, W: Write>(cfg: ScenarioConfig, reader: R, mut writer: W) -> Result<()> {
    let mut session = Session::new(cfg)?;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(writer, "{}", session.handle_line(&line))?;
        writer.flush()?;
        if session.is_closed() {
            break;
        }
    }
    Ok(())
}

pub fn serve_stdio(cfg: ScenarioConfig) -> Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve_stream(cfg, stdin.lock(), stdout.lock())
}

/// Accepts connections forever; each connection gets its own session thread.
pub fn serve_tcp(cfg: ScenarioConfig, addr: impl ToSocketAddrs) -> Result<()> {
    let listener = TcpListener::bind(addr)?;
    serve_listener(cfg, listener)
}

pub fn serve_listener(cfg: ScenarioConfig, listener: TcpListener) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let cfg = cfg.clone();
        thread::spawn(move || {
            let _ = handle_connection(cfg, stream);
        });
    }
    Ok(())
}

fn handle_connection(cfg: ScenarioConfig, stream: TcpStream) -> Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_stream(cfg, reader, stream)
}

pub fn serve(cfg: ScenarioConfig, endpoint: &Endpoint) -> Result<()> {
    match endpoint {
        Endpoint::Stdio => serve_stdio(cfg),
        Endpoint::Tcp(addr) => serve_tcp(cfg, addr.as_str()),
    }
}
