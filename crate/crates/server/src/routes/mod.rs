pub mod accounts;
pub mod logs;
pub mod sessions;

use axum::response::Html;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::channel;
use crate::state::AppState;

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn index() -> Html<&'static str> {
    Html(include_str!("../../static/index.html"))
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/register", post(accounts::register))
        .route("/login", post(accounts::login))
        .route("/login/anonymous", post(accounts::login_anonymous))
        .route("/logout", post(accounts::logout))
        .route("/me", get(accounts::me))
        .route("/admin/teachers/pending", get(accounts::pending_teachers))
        .route("/admin/teachers/{id}/confirm", post(accounts::confirm_teacher))
        .route("/admin/login-log", get(accounts::login_log))
        .route("/classes", post(accounts::create_class).get(accounts::list_classes))
        .route("/classes/{id}/students", post(accounts::create_student))
        .route("/classes/{id}/groups", post(accounts::form_groups).get(accounts::list_groups))
        .route("/constructions", post(accounts::create_construction).get(accounts::own_constructions))
        .route("/constructions/shared", get(accounts::shared_constructions))
        .route("/constructions/{id}", get(accounts::get_construction).put(accounts::update_construction))
        .route("/scrapbook", get(accounts::scrapbook))
        .route("/sessions", post(sessions::open).get(sessions::list))
        .route("/sessions/{id}", get(sessions::summary))
        .route("/sessions/{id}/join", post(sessions::join))
        .route("/sessions/{id}/close", post(sessions::close))
        .route("/sessions/{id}/lock", post(sessions::claim_lock).delete(sessions::release_lock))
        .route("/sessions/{id}/group-construction", put(sessions::export))
        .route("/sessions/{id}/import", post(sessions::import))
        .route("/sessions/{id}/individual", get(sessions::get_individual).put(sessions::put_individual))
        .route("/sessions/{id}/group/{g}/snapshot", get(sessions::snapshot))
        .route("/sessions/{id}/chat", post(sessions::post_chat).get(sessions::read_chat))
        .route("/sessions/{id}/scrapbook", post(sessions::scrapbook))
        .route("/sessions/{id}/observe/{g}", get(sessions::observe))
        .route("/sessions/{id}/events", get(sessions::events))
        .route("/sessions/{id}/channel", get(channel::channel))
        .route("/logs", post(logs::start).get(logs::list))
        .route("/logs/{id}", get(logs::get))
        .route("/logs/{id}/events", post(logs::append))
        .route("/logs/{id}/finish", post(logs::finish))
        .route("/logs/{id}/reconstruct", get(logs::reconstruct))
        .route("/logs/{id}/schedule", get(logs::schedule))
        .route("/logs/{id}/export", get(logs::export));
    Router::new()
        .route("/", get(index))
        .nest("/api", api)
        .with_state(state)
}
