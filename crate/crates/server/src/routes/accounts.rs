use std::collections::BTreeSet;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};

use geolab_core::accounts::{
    Accounts, AuthToken, ConstructionRecord, ConstructionUpdate, LoginLogEntry, Principal, PublicAccount,
    SchoolClass, WorkGroup,
};
use geolab_core::ids::{ClassId, ConstructionId, UserId};

use crate::error::{ApiError, ApiResult};
use crate::state::{AppState, Caller};

#[derive(Deserialize)]
pub struct Credentials {
    pub username: String,
    pub credential: String,
}

/// Runs credential hashing off the async workers.
async fn blocking<T, F>(accounts: &Arc<Accounts>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Accounts) -> Result<T, geolab_core::accounts::AccountError> + Send + 'static,
{
    let accounts = accounts.clone();
    tokio::task::spawn_blocking(move || f(&accounts))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
        .map_err(ApiError::from)
}

fn session_body(token: AuthToken, principal: Principal) -> Json<Value> {
    Json(json!({ "token": token.as_str(), "user": principal }))
}

pub async fn register(
    State(st): State<AppState>,
    Json(body): Json<Credentials>,
) -> ApiResult<(StatusCode, Json<PublicAccount>)> {
    let account = blocking(&st.accounts, move |a| a.register_teacher(&body.username, &body.credential)).await?;
    Ok((StatusCode::CREATED, Json(account.public())))
}

pub async fn login(State(st): State<AppState>, Json(body): Json<Credentials>) -> ApiResult<Json<Value>> {
    let (token, principal) = blocking(&st.accounts, move |a| a.authenticate(&body.username, &body.credential)).await?;
    Ok(session_body(token, principal))
}

pub async fn login_anonymous(State(st): State<AppState>) -> ApiResult<Json<Value>> {
    let (token, principal) = st.accounts.login_anonymous()?;
    Ok(session_body(token, principal))
}

pub async fn logout(State(st): State<AppState>, caller: Caller) -> ApiResult<StatusCode> {
    st.accounts.logout(&caller.token)?;
    Ok(StatusCode::NO_CONTENT)
}

pub async fn me(caller: Caller) -> Json<Principal> {
    Json(caller.principal)
}

pub async fn confirm_teacher(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<PublicAccount>> {
    Ok(Json(st.accounts.confirm_teacher(&caller.principal, &UserId::from(id.as_str()))?.public()))
}

pub async fn pending_teachers(State(st): State<AppState>, caller: Caller) -> ApiResult<Json<Vec<PublicAccount>>> {
    Ok(Json(st.accounts.pending_teachers(&caller.principal)?))
}

pub async fn login_log(State(st): State<AppState>, caller: Caller) -> ApiResult<Json<Vec<LoginLogEntry>>> {
    Ok(Json(st.accounts.login_log(&caller.principal)?))
}

#[derive(Deserialize)]
pub struct NewClass {
    pub name: String,
}

pub async fn create_class(
    State(st): State<AppState>,
    caller: Caller,
    Json(body): Json<NewClass>,
) -> ApiResult<(StatusCode, Json<SchoolClass>)> {
    Ok((StatusCode::CREATED, Json(st.accounts.create_class(&caller.principal, &body.name)?)))
}

pub async fn list_classes(State(st): State<AppState>, caller: Caller) -> ApiResult<Json<Vec<SchoolClass>>> {
    Ok(Json(st.accounts.list_classes(&caller.principal)?))
}

pub async fn create_student(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(body): Json<Credentials>,
) -> ApiResult<(StatusCode, Json<PublicAccount>)> {
    let actor = caller.principal;
    let class = ClassId::from(id.as_str());
    let account =
        blocking(&st.accounts, move |a| a.create_student(&actor, &class, &body.username, &body.credential)).await?;
    Ok((StatusCode::CREATED, Json(account.public())))
}

#[derive(Deserialize)]
pub struct GroupsBody {
    pub groups: Vec<BTreeSet<UserId>>,
}

pub async fn form_groups(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(body): Json<GroupsBody>,
) -> ApiResult<Json<Vec<WorkGroup>>> {
    let class = ClassId::from(id.as_str());
    Ok(Json(st.accounts.form_groups(&caller.principal, &class, &body.groups)?))
}

pub async fn list_groups(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<WorkGroup>>> {
    let class_id = ClassId::from(id.as_str());
    let owned = st.accounts.list_classes(&caller.principal)?.into_iter().any(|c| c.class_id == class_id);
    if !owned {
        return Err(geolab_core::accounts::AccountError::Forbidden.into());
    }
    Ok(Json(st.accounts.groups_of_class(&class_id)?))
}

/// A construction document, either as canonical text or as a JSON object.
pub fn payload_text(v: Value) -> ApiResult<String> {
    match v {
        Value::String(s) => Ok(s),
        Value::Object(_) => Ok(v.to_string()),
        _ => Err(ApiError::bad_request("payload must be a string or an object")),
    }
}

#[derive(Deserialize)]
pub struct NewConstruction {
    pub title: String,
    pub payload: Value,
    #[serde(default)]
    pub shared: bool,
}

pub async fn create_construction(
    State(st): State<AppState>,
    caller: Caller,
    Json(body): Json<NewConstruction>,
) -> ApiResult<(StatusCode, Json<ConstructionRecord>)> {
    let payload = payload_text(body.payload)?;
    let record = st.accounts.create_construction(&caller.principal, &body.title, &payload, body.shared)?;
    Ok((StatusCode::CREATED, Json(record)))
}

pub async fn own_constructions(
    State(st): State<AppState>,
    caller: Caller,
) -> ApiResult<Json<Vec<ConstructionRecord>>> {
    Ok(Json(st.accounts.list_own_constructions(&caller.principal)?))
}

pub async fn shared_constructions(
    State(st): State<AppState>,
    caller: Caller,
) -> ApiResult<Json<Vec<ConstructionRecord>>> {
    Ok(Json(st.accounts.list_shared_constructions(&caller.principal)?))
}

pub async fn get_construction(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<ConstructionRecord>> {
    Ok(Json(st.accounts.read_construction(&caller.principal, &ConstructionId::from(id.as_str()))?))
}

#[derive(Deserialize)]
pub struct ConstructionPatch {
    pub title: Option<String>,
    pub payload: Option<Value>,
    pub shared: Option<bool>,
}

pub async fn update_construction(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(body): Json<ConstructionPatch>,
) -> ApiResult<Json<ConstructionRecord>> {
    let update = ConstructionUpdate {
        title: body.title,
        payload: body.payload.map(payload_text).transpose()?,
        shared: body.shared,
    };
    let id = ConstructionId::from(id.as_str());
    Ok(Json(st.accounts.update_construction(&caller.principal, &id, update)?))
}

pub async fn scrapbook(State(st): State<AppState>, caller: Caller) -> ApiResult<Json<Vec<ConstructionRecord>>> {
    Ok(Json(st.accounts.scrapbook(&caller.principal)?))
}
