//! Message vocabulary and the JSON header mapping.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::gateway::LeaderboardEntry;
use crate::world::{
    Action, ActionKind, ChannelType, Observation, Pose2D, Termination, WorldConfig,
};

use super::error::{ErrorCode, ProtocolError};
use super::PROTOCOL_VERSION;

/// Action space advertised when an environment is made.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionSpace {
    Discrete { n: u32 },
    Box { low: [f64; 2], high: [f64; 2] },
}

impl ActionSpace {
    pub fn for_config(config: &WorldConfig) -> Self {
        match config.action_kind {
            ActionKind::Discrete => ActionSpace::Discrete { n: 4 },
            ActionKind::Continuous => {
                let p = &config.action_params;
                ActionSpace::Box {
                    low: [-p.continuous_linear_bound, -p.continuous_angular_bound],
                    high: [p.continuous_linear_bound, p.continuous_angular_bound],
                }
            }
        }
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            ActionSpace::Discrete { .. } => ActionKind::Discrete,
            ActionSpace::Box { .. } => ActionKind::Continuous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MakeRequest {
    pub env_name: String,
    pub experiment_name: Option<String>,
    pub resume_experiment: bool,
    pub channel_type: ChannelType,
    /// Fixes the world generator; the server picks one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello {
        token: String,
        client_version: String,
    },
    HelloOk {
        session_id: String,
        server_version: String,
    },
    Make(MakeRequest),
    MakeOk {
        env_handle: u32,
        obs_shape: [u32; 3],
        action_space: ActionSpace,
    },
    Reset {
        env_handle: u32,
    },
    ResetOk {
        observation: Observation,
    },
    Step {
        env_handle: u32,
        action: Action,
    },
    StepOk {
        reward: f64,
        done: bool,
        termination: Termination,
        step_index: u32,
        observation: Observation,
    },
    Close {
        env_handle: u32,
    },
    CloseOk,
    Error {
        code: ErrorCode,
        detail: String,
    },
    Heartbeat,
    LeaderboardQuery {
        top_n: u32,
    },
    LeaderboardOk {
        entries: Vec<LeaderboardEntry>,
    },
    /// Ground-truth pose query. Only honoured by servers started with pose
    /// debugging enabled.
    DebugPose {
        env_handle: u32,
    },
    DebugPoseOk {
        pose: Pose2D,
        monolith: [f64; 2],
    },
}

impl Message {
    pub fn type_name(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::HelloOk { .. } => "hello_ok",
            Message::Make(_) => "make",
            Message::MakeOk { .. } => "make_ok",
            Message::Reset { .. } => "reset",
            Message::ResetOk { .. } => "reset_ok",
            Message::Step { .. } => "step",
            Message::StepOk { .. } => "step_ok",
            Message::Close { .. } => "close",
            Message::CloseOk => "close_ok",
            Message::Error { .. } => "error",
            Message::Heartbeat => "heartbeat",
            Message::LeaderboardQuery { .. } => "leaderboard_query",
            Message::LeaderboardOk { .. } => "leaderboard_ok",
            Message::DebugPose { .. } => "debug_pose",
            Message::DebugPoseOk { .. } => "debug_pose_ok",
        }
    }

    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        Message::Error {
            code,
            detail: detail.into(),
        }
    }
}

/// A message together with its correlation id.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub id: u64,
    pub message: Message,
}

impl Envelope {
    pub fn new(id: u64, message: Message) -> Self {
        Self { id, message }
    }
}

const KNOWN_TYPES: [&str; 16] = [
    "hello",
    "hello_ok",
    "make",
    "make_ok",
    "reset",
    "reset_ok",
    "step",
    "step_ok",
    "close",
    "close_ok",
    "error",
    "heartbeat",
    "leaderboard_query",
    "leaderboard_ok",
    "debug_pose",
    "debug_pose_ok",
];

/// Header shape of every message. Observation-carrying messages describe
/// their blob through `channel_type` and `obs_shape`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum Header {
    Hello {
        token: String,
        client_version: String,
    },
    HelloOk {
        session_id: String,
        server_version: String,
    },
    Make {
        env_name: String,
        experiment_name: Option<String>,
        resume_experiment: bool,
        channel_type: ChannelType,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    MakeOk {
        env_handle: u32,
        obs_shape: [u32; 3],
        action_space: ActionSpace,
    },
    Reset {
        env_handle: u32,
    },
    ResetOk {
        channel_type: ChannelType,
        obs_shape: [u32; 3],
    },
    Step {
        env_handle: u32,
        action: Action,
    },
    StepOk {
        reward: f64,
        done: bool,
        termination: Termination,
        step_index: u32,
        channel_type: ChannelType,
        obs_shape: [u32; 3],
    },
    Close {
        env_handle: u32,
    },
    CloseOk {},
    Error {
        code: ErrorCode,
        detail: String,
    },
    Heartbeat {},
    LeaderboardQuery {
        top_n: u32,
    },
    LeaderboardOk {
        entries: Vec<LeaderboardEntry>,
    },
    DebugPose {
        env_handle: u32,
    },
    DebugPoseOk {
        pose: Pose2D,
        monolith: [f64; 2],
    },
}

fn check_finite(values: &[f64], what: &str) -> Result<(), ProtocolError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ProtocolError::InvalidMessage(format!(
            "{what} must be finite"
        )))
    }
}

/// Splits a message into its header and blob.
pub(super) fn to_parts(message: &Message) -> Result<(Value, Vec<u8>), ProtocolError> {
    let (header, blob) = match message.clone() {
        Message::Hello {
            token,
            client_version,
        } => (
            Header::Hello {
                token,
                client_version,
            },
            Vec::new(),
        ),
        Message::HelloOk {
            session_id,
            server_version,
        } => (
            Header::HelloOk {
                session_id,
                server_version,
            },
            Vec::new(),
        ),
        Message::Make(m) => (
            Header::Make {
                env_name: m.env_name,
                experiment_name: m.experiment_name,
                resume_experiment: m.resume_experiment,
                channel_type: m.channel_type,
                seed: m.seed,
            },
            Vec::new(),
        ),
        Message::MakeOk {
            env_handle,
            obs_shape,
            action_space,
        } => {
            if let ActionSpace::Box { low, high } = action_space {
                check_finite(&[low[0], low[1], high[0], high[1]], "action bounds")?;
            }
            (
                Header::MakeOk {
                    env_handle,
                    obs_shape,
                    action_space,
                },
                Vec::new(),
            )
        }
        Message::Reset { env_handle } => (Header::Reset { env_handle }, Vec::new()),
        Message::ResetOk { observation } => (
            Header::ResetOk {
                channel_type: observation.channel_type(),
                obs_shape: observation.shape(),
            },
            observation.to_blob(),
        ),
        Message::Step { env_handle, action } => {
            if let Action::Continuous { linear, angular } = action {
                check_finite(&[linear, angular], "continuous action")?;
            }
            (Header::Step { env_handle, action }, Vec::new())
        }
        Message::StepOk {
            reward,
            done,
            termination,
            step_index,
            observation,
        } => {
            check_finite(&[reward], "reward")?;
            (
                Header::StepOk {
                    reward,
                    done,
                    termination,
                    step_index,
                    channel_type: observation.channel_type(),
                    obs_shape: observation.shape(),
                },
                observation.to_blob(),
            )
        }
        Message::Close { env_handle } => (Header::Close { env_handle }, Vec::new()),
        Message::CloseOk => (Header::CloseOk {}, Vec::new()),
        Message::Error { code, detail } => (Header::Error { code, detail }, Vec::new()),
        Message::Heartbeat => (Header::Heartbeat {}, Vec::new()),
        Message::LeaderboardQuery { top_n } => (Header::LeaderboardQuery { top_n }, Vec::new()),
        Message::LeaderboardOk { entries } => {
            for e in &entries {
                check_finite(&[e.best_window_avg], "best_window_avg")?;
            }
            (Header::LeaderboardOk { entries }, Vec::new())
        }
        Message::DebugPose { env_handle } => (Header::DebugPose { env_handle }, Vec::new()),
        Message::DebugPoseOk { pose, monolith } => {
            check_finite(
                &[pose.x, pose.y, pose.theta, monolith[0], monolith[1]],
                "pose",
            )?;
            (Header::DebugPoseOk { pose, monolith }, Vec::new())
        }
    };
    let value =
        serde_json::to_value(header).map_err(|e| ProtocolError::InvalidMessage(e.to_string()))?;
    Ok((value, blob))
}

/// Builds the complete header object, `id` and `v` included. The map is
/// ordered, so serialization is byte-reproducible.
pub(super) fn header_object(
    id: u64,
    message: &Message,
) -> Result<(Map<String, Value>, Vec<u8>), ProtocolError> {
    let (value, blob) = to_parts(message)?;
    let Value::Object(mut map) = value else {
        unreachable!("internally tagged enums serialize to objects")
    };
    map.insert("id".into(), Value::from(id));
    map.insert("v".into(), Value::from(PROTOCOL_VERSION));
    Ok((map, blob))
}

/// Parses a header and pairs it with `blob`.
pub(super) fn from_parts(header: &[u8], blob: &[u8]) -> Result<Envelope, ProtocolError> {
    let bad = |id, reason: String| ProtocolError::BadHeader { id, reason };
    let value: Value = serde_json::from_slice(header).map_err(|e| bad(None, e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(bad(None, "header is not a JSON object".into()));
    };
    let id = map
        .remove("id")
        .ok_or_else(|| bad(None, "missing field `id`".into()))?
        .as_u64()
        .ok_or_else(|| bad(None, "`id` must be an unsigned integer".into()))?;
    let request_id = id;
    let id = Some(id);
    let version = map
        .remove("v")
        .ok_or_else(|| bad(id, "missing field `v`".into()))?
        .as_i64()
        .ok_or_else(|| bad(id, "`v` must be an integer".into()))?;
    if version != PROTOCOL_VERSION {
        return Err(ProtocolError::VersionMismatch { id, got: version });
    }
    let ty = match map.get("type") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(bad(id, "`type` must be a string".into())),
        None => return Err(bad(id, "missing field `type`".into())),
    };
    if !KNOWN_TYPES.contains(&ty.as_str()) {
        return Err(ProtocolError::UnknownType { id, ty });
    }
    let header: Header =
        serde_json::from_value(Value::Object(map)).map_err(|e| bad(id, e.to_string()))?;

    let no_blob = |message: Message| {
        if blob.is_empty() {
            Ok(message)
        } else {
            Err(ProtocolError::BlobLengthMismatch {
                id,
                expected: 0,
                actual: blob.len(),
            })
        }
    };
    let observation = |channel_type: ChannelType, shape: [u32; 3]| {
        let [h, w, c] = shape;
        if c != channel_type.channel_count() {
            return Err(bad(
                id,
                format!("obs_shape channel count {c} does not match {channel_type}"),
            ));
        }
        let expected = channel_type.blob_len(w, h);
        Observation::from_blob(channel_type, w, h, blob).ok_or(ProtocolError::BlobLengthMismatch {
            id,
            expected,
            actual: blob.len(),
        })
    };

    let message = match header {
        Header::Hello {
            token,
            client_version,
        } => no_blob(Message::Hello {
            token,
            client_version,
        })?,
        Header::HelloOk {
            session_id,
            server_version,
        } => no_blob(Message::HelloOk {
            session_id,
            server_version,
        })?,
        Header::Make {
            env_name,
            experiment_name,
            resume_experiment,
            channel_type,
            seed,
        } => no_blob(Message::Make(MakeRequest {
            env_name,
            experiment_name,
            resume_experiment,
            channel_type,
            seed,
        }))?,
        Header::MakeOk {
            env_handle,
            obs_shape,
            action_space,
        } => no_blob(Message::MakeOk {
            env_handle,
            obs_shape,
            action_space,
        })?,
        Header::Reset { env_handle } => no_blob(Message::Reset { env_handle })?,
        Header::ResetOk {
            channel_type,
            obs_shape,
        } => Message::ResetOk {
            observation: observation(channel_type, obs_shape)?,
        },
        Header::Step { env_handle, action } => no_blob(Message::Step { env_handle, action })?,
        Header::StepOk {
            reward,
            done,
            termination,
            step_index,
            channel_type,
            obs_shape,
        } => Message::StepOk {
            reward,
            done,
            termination,
            step_index,
            observation: observation(channel_type, obs_shape)?,
        },
        Header::Close { env_handle } => no_blob(Message::Close { env_handle })?,
        Header::CloseOk {} => no_blob(Message::CloseOk)?,
        Header::Error { code, detail } => no_blob(Message::Error { code, detail })?,
        Header::Heartbeat {} => no_blob(Message::Heartbeat)?,
        Header::LeaderboardQuery { top_n } => no_blob(Message::LeaderboardQuery { top_n })?,
        Header::LeaderboardOk { entries } => no_blob(Message::LeaderboardOk { entries })?,
        Header::DebugPose { env_handle } => no_blob(Message::DebugPose { env_handle })?,
        Header::DebugPoseOk { pose, monolith } => no_blob(Message::DebugPoseOk { pose, monolith })?,
    };
    Ok(Envelope {
        id: request_id,
        message,
    })
}
