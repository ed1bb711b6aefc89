//! HTTP host for human-vs-agent sessions.
//!
//! The human always sits in seat 0. Every response is built from a redacted
//! view: the human's own card identities never leave the server while the
//! game is live.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::cors::CorsLayer;

use crate::belief::CardKnowledge;
use crate::engine::{Action, ActionOutcome, Card, GameConfig, GameState, HandSlot, LegalMask, NUM_ACTIONS};
use crate::factors::{factor_matrix, FactorId, NUM_FACTORS};
use crate::instructor::{instruct, DecisionSet, InstructionResult, DEFAULT_EPSILON};
use crate::policy::{agreement, choose_action, expected_rewards, Profile, StrategyVector};
use crate::store::{records_to_decisions, write_decisions, DecisionRecord};
use crate::training::game_seed;

pub const HUMAN_SEAT: usize = 0;
pub const AGENT_SEAT: usize = 1;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, message)
    }

    fn conflict(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::CONFLICT, message)
    }

    fn unprocessable(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Finished,
}

pub struct Session {
    pub id: String,
    pub profile: Profile,
    pub agent: StrategyVector,
    pub state: GameState,
    /// Decisions made from the human seat, with factor matrices.
    pub log: Vec<DecisionRecord>,
    pub status: SessionStatus,
    pub final_score: Option<u8>,
}

impl Session {
    fn refresh_status(&mut self) {
        if let Some(score) = self.state.is_terminal() {
            self.status = SessionStatus::Finished;
            self.final_score = Some(score);
        }
    }

    fn agent_move(&mut self) -> Result<OutcomeView, ApiError> {
        let action = choose_action(&self.state, &self.agent).map_err(|e| ApiError::internal(e.to_string()))?;
        let (next, outcome) = self
            .state
            .apply_action(action)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        self.state = next;
        self.refresh_status();
        Ok(OutcomeView::from_outcome(&outcome))
    }
}

#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    /// Finished sessions' decision logs are written here as `<id>.jsonl`.
    pub persist_dir: Option<PathBuf>,
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    counter: AtomicU64,
    config: ServiceConfig,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> AppState {
        AppState {
            config,
            ..AppState::default()
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id:?}")))
    }

    fn persist(&self, session: &Session) {
        let Some(dir) = &self.config.persist_dir else {
            return;
        };
        let path = dir.join(format!("{}.jsonl", session.id));
        if let Err(e) = write_decisions(&path, &session.log) {
            log::error!("could not persist session {}: {e}", session.id);
        }
    }
}

// ---------------------------------------------------------------- views

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OwnSlotView {
    pub knowledge: CardKnowledge,
    pub singled_out: bool,
    pub drawn_turn: u32,
}

/// The game as the human seat may see it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub status: SessionStatus,
    pub turn_number: u32,
    pub current_player: usize,
    pub deck_size: usize,
    pub fireworks: [u8; 5],
    pub discards: Vec<Card>,
    pub info_tokens: u8,
    pub strikes: u8,
    pub score: u8,
    pub own_hand: Vec<Option<OwnSlotView>>,
    pub partner_hand: Vec<Option<HandSlot>>,
    /// Legal actions for the human; all false unless it is the human's turn.
    pub legal_mask: LegalMask,
    pub final_score: Option<u8>,
    /// The human's cards, disclosed once the game is over.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revealed_hand: Option<Vec<Option<Card>>>,
}

impl StateView {
    pub fn of(session: &Session) -> StateView {
        let state = &session.state;
        let finished = session.status == SessionStatus::Finished;
        let legal_mask = if !finished && state.current_player == HUMAN_SEAT {
            state.legal_actions().unwrap_or_else(|_| LegalMask::none())
        } else {
            LegalMask::none()
        };
        StateView {
            status: session.status,
            turn_number: state.turn_number,
            current_player: state.current_player,
            deck_size: state.deck.len(),
            fireworks: state.fireworks,
            discards: state.discards.clone(),
            info_tokens: state.info_tokens,
            strikes: state.strikes,
            score: state.fireworks.iter().sum(),
            own_hand: state.hands[HUMAN_SEAT]
                .iter()
                .map(|slot| {
                    slot.as_ref().map(|s| OwnSlotView {
                        knowledge: s.knowledge,
                        singled_out: s.singled_out,
                        drawn_turn: s.drawn_turn,
                    })
                })
                .collect(),
            partner_hand: state.hands[AGENT_SEAT].to_vec(),
            legal_mask,
            final_score: session.final_score,
            revealed_hand: finished.then(|| state.hands[HUMAN_SEAT].iter().map(|s| s.as_ref().map(|s| s.card)).collect()),
        }
    }
}

/// What happened on one move, minus anything about the human's hidden cards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeView {
    pub actor: usize,
    pub action_index: usize,
    pub action: String,
    /// Card that left the actor's hand.
    pub card: Option<Card>,
    pub playable: Option<bool>,
    pub strike: bool,
    pub touched: Vec<usize>,
}

impl OutcomeView {
    fn from_outcome(outcome: &ActionOutcome) -> OutcomeView {
        OutcomeView {
            actor: outcome.actor,
            action_index: outcome.action.index(),
            action: outcome.action.to_string(),
            card: outcome.card,
            playable: outcome.playable,
            strike: outcome.strike,
            touched: outcome.touched.clone(),
        }
    }
}

// ---------------------------------------------------------------- payloads

#[derive(Clone, Debug, Deserialize)]
pub struct NewSession {
    pub agent_profile: String,
    pub seed: Option<u64>,
    #[serde(default)]
    pub agent_first: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub agent_profile: String,
    pub seed: u64,
    pub state: StateView,
    pub agent_move: Option<OutcomeView>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ActionRequest {
    pub action_index: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionResponse {
    pub state: StateView,
    pub human_move: OutcomeView,
    pub agent_move: Option<OutcomeView>,
    pub status: SessionStatus,
    pub final_score: Option<u8>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct HpfQuery {
    #[serde(default)]
    pub legal_only: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HpfResponse {
    pub factors: Vec<String>,
    /// 12 rows of 20 entries, in factor order.
    pub factor_matrix: Vec<Vec<f64>>,
    /// Expected reward per action; `null` for illegal actions when `legal_only` is set.
    pub y: Vec<Option<f64>>,
    pub legal_mask: LegalMask,
    pub weights: [f64; NUM_FACTORS],
}

#[derive(Clone, Debug, Deserialize)]
pub struct InstructRequest {
    #[serde(default)]
    pub session_ids: Vec<String>,
    #[serde(default)]
    pub decisions: Vec<DecisionRecord>,
    #[serde(default = "default_ideal")]
    pub ideal_profile: String,
    /// Defaults to the agreement of the ideal with the pooled decisions.
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
}

fn default_ideal() -> String {
    Profile::SelfPlay.key().to_string()
}

// ---------------------------------------------------------------- handlers

fn parse_profile(name: &str) -> Result<Profile, ApiError> {
    name.parse().map_err(|e: crate::policy::UnknownProfile| ApiError::not_found(e.to_string()))
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    Json(req): Json<NewSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let profile = parse_profile(&req.agent_profile)?;
    let n = app.counter.fetch_add(1, Ordering::SeqCst) + 1;
    let id = format!("s{n}");
    let seed = req.seed.unwrap_or_else(|| game_seed(0, n));
    let config = GameConfig {
        seed,
        first_player: if req.agent_first { AGENT_SEAT } else { HUMAN_SEAT },
        ..GameConfig::default()
    };
    let mut session = Session {
        id: id.clone(),
        profile,
        agent: profile.strategy(),
        state: GameState::new(config),
        log: Vec::new(),
        status: SessionStatus::Active,
        final_score: None,
    };
    let agent_move = if session.state.current_player == AGENT_SEAT {
        Some(session.agent_move()?)
    } else {
        None
    };
    let body = SessionCreated {
        session_id: id.clone(),
        agent_profile: profile.key().to_string(),
        seed,
        state: StateView::of(&session),
        agent_move,
    };
    app.sessions
        .write()
        .expect("session map lock")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    let session = app.session(&id)?;
    let session = session.lock().await;
    Ok(Json(StateView::of(&session)))
}

async fn take_action(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<ActionRequest>,
) -> Result<Json<ActionResponse>, ApiError> {
    let handle = app.session(&id)?;
    let mut session = handle.lock().await;
    if session.status == SessionStatus::Finished {
        return Err(ApiError::conflict("game is over"));
    }
    if session.state.current_player != HUMAN_SEAT {
        return Err(ApiError::conflict("it is not the human's turn"));
    }
    let action = Action::from_index(req.action_index)
        .ok_or_else(|| ApiError::unprocessable(format!("action_index {} is out of range 0..{NUM_ACTIONS}", req.action_index)))?;
    if let Err(reason) = session.state.legality(action) {
        return Err(ApiError::unprocessable(format!("illegal action {action}: {}", reason.code())));
    }
    let h = factor_matrix(&session.state, HUMAN_SEAT).map_err(|e| ApiError::internal(e.to_string()))?;
    let record = DecisionRecord::capture(&session.state, &h, action, "human", false, true);
    let (next, outcome) = session
        .state
        .apply_action(action)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    session.log.push(record);
    session.state = next;
    session.refresh_status();
    let human_move = OutcomeView::from_outcome(&outcome);
    let agent_move = if session.status == SessionStatus::Active && session.state.current_player == AGENT_SEAT {
        Some(session.agent_move()?)
    } else {
        None
    };
    if session.status == SessionStatus::Finished {
        app.persist(&session);
    }
    Ok(Json(ActionResponse {
        state: StateView::of(&session),
        human_move,
        agent_move,
        status: session.status,
        final_score: session.final_score,
    }))
}

async fn get_hpf(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<HpfQuery>,
) -> Result<Json<HpfResponse>, ApiError> {
    let handle = app.session(&id)?;
    let session = handle.lock().await;
    if session.status == SessionStatus::Finished {
        return Err(ApiError::conflict("game is over"));
    }
    let actor = session.state.current_player;
    let h = factor_matrix(&session.state, actor).map_err(|e| ApiError::internal(e.to_string()))?;
    let out = expected_rewards(&h, &session.agent);
    let y = (0..NUM_ACTIONS)
        .map(|i| (!query.legal_only || h.legal.is_legal(i)).then_some(out.y[i]))
        .collect();
    Ok(Json(HpfResponse {
        factors: FactorId::keys().iter().map(|k| k.to_string()).collect(),
        factor_matrix: h.entries.iter().map(|row| row.to_vec()).collect(),
        y,
        legal_mask: h.legal,
        weights: session.agent.weights,
    }))
}

async fn get_decisions(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<DecisionRecord>>, ApiError> {
    let handle = app.session(&id)?;
    let session = handle.lock().await;
    if session.status != SessionStatus::Finished {
        return Err(ApiError::conflict("decision logs are available once the game is over"));
    }
    Ok(Json(session.log.clone()))
}

async fn post_instruct(
    State(app): State<Arc<AppState>>,
    Json(req): Json<InstructRequest>,
) -> Result<Json<InstructionResult>, ApiError> {
    let ideal = parse_profile(&req.ideal_profile)?.strategy();
    let mut records = req.decisions;
    for id in &req.session_ids {
        let handle = app.session(id)?;
        records.extend(handle.lock().await.log.iter().cloned());
    }
    if records.is_empty() {
        return Err(ApiError::unprocessable("no decisions to analyze"));
    }
    let decisions: DecisionSet = records_to_decisions(&records).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let alpha = req.alpha.unwrap_or_else(|| agreement(&ideal, &decisions));
    let epsilon = req.epsilon.unwrap_or(DEFAULT_EPSILON);
    let result = instruct(&decisions, &ideal, alpha, epsilon).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    Ok(Json(result))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/action", post(take_action))
        .route("/sessions/{id}/hpf", get(get_hpf))
        .route("/sessions/{id}/decisions", get(get_decisions))
        .route("/instruct", post(post_instruct))
        .layer(CorsLayer::permissive())
        .with_state(app)
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(AppState::new(config)))).await
}
