#![allow(dead_code)]

pub mod ws;

use std::path::Path;

use geolab_server::config::AdminBootstrap;
use geolab_server::{start, RunningServer, ServerConfig};
use reqwest::{Client, Method, StatusCode};
use serde_json::{json, Value};

pub const ADMIN: (&str, &str) = ("root", "root-pw");

pub fn test_config(dir: &Path, sync_interval_ms: u64) -> ServerConfig {
    let mut c = ServerConfig::new(0, dir);
    c.bind = "127.0.0.1".into();
    c.sync_interval_ms = sync_interval_ms;
    c.fast_hashing = true;
    c.pepper = Some("test-pepper".into());
    c.admin = Some(AdminBootstrap { username: ADMIN.0.into(), credential: ADMIN.1.into() });
    c
}

pub struct Harness {
    pub dir: tempfile::TempDir,
    pub server: Option<RunningServer>,
    pub api: Api,
}

impl Harness {
    pub async fn start(sync_interval_ms: u64) -> Harness {
        let dir = tempfile::tempdir().unwrap();
        let server = start(test_config(dir.path(), sync_interval_ms)).await.unwrap();
        let api = Api::new(&format!("http://{}", server.addr()));
        Harness { dir, server: Some(server), api }
    }

    pub fn server(&self) -> &RunningServer {
        self.server.as_ref().unwrap()
    }

    pub fn ws_url(&self, session: &str, token: &str, resume_after: Option<u64>) -> String {
        let mut url = format!("ws://{}/api/sessions/{session}/channel?token={token}", self.server().addr());
        if let Some(n) = resume_after {
            url.push_str(&format!("&resume_after={n}"));
        }
        url
    }

    pub async fn restart(&mut self, sync_interval_ms: u64) {
        if let Some(s) = self.server.take() {
            s.shutdown().await.unwrap();
        }
        let server = start(test_config(self.dir.path(), sync_interval_ms)).await.unwrap();
        self.api = Api::new(&format!("http://{}", server.addr()));
        self.server = Some(server);
    }
}

#[derive(Clone)]
pub struct Api {
    base: String,
    client: Client,
}

impl Api {
    pub fn new(base: &str) -> Api {
        Api { base: base.to_string(), client: Client::new() }
    }

    pub async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = self.client.request(method, format!("{}{}", self.base, path));
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status();
        let text = resp.text().await.unwrap();
        let value = if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        };
        (status, value)
    }

    pub async fn get(&self, path: &str, token: &str) -> (StatusCode, Value) {
        self.call(Method::GET, path, Some(token), None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> (StatusCode, Value) {
        self.call(Method::POST, path, Some(token), Some(body)).await
    }

    pub async fn put(&self, path: &str, token: &str, body: Value) -> (StatusCode, Value) {
        self.call(Method::PUT, path, Some(token), Some(body)).await
    }

    pub async fn delete(&self, path: &str, token: &str) -> (StatusCode, Value) {
        self.call(Method::DELETE, path, Some(token), None).await
    }

    pub async fn login(&self, username: &str, credential: &str) -> (String, Value) {
        let (status, body) = self
            .call(Method::POST, "/api/login", None, Some(json!({ "username": username, "credential": credential })))
            .await;
        assert_eq!(status, StatusCode::OK, "login {username}: {body}");
        (body["token"].as_str().unwrap().to_string(), body["user"].clone())
    }
}

/// Tokens and ids of a classroom created through the API.
pub struct Room {
    pub admin: String,
    pub teacher: String,
    pub teacher_id: String,
    pub class_id: String,
    /// (token, user_id) per student, grouped.
    pub groups: Vec<Vec<(String, String)>>,
}

pub async fn room(api: &Api, tag: &str, sizes: &[usize]) -> Room {
    let (admin, _) = api.login(ADMIN.0, ADMIN.1).await;
    let tname = format!("teacher-{tag}");
    let (s, t) = api
        .call(Method::POST, "/api/register", None, Some(json!({ "username": tname, "credential": "pw" })))
        .await;
    assert_eq!(s, StatusCode::CREATED, "{t}");
    let tid = t["user_id"].as_str().unwrap().to_string();
    let (s, _) = api.post(&format!("/api/admin/teachers/{tid}/confirm"), &admin, json!({})).await;
    assert_eq!(s, StatusCode::OK);
    let (teacher, _) = api.login(&tname, "pw").await;
    let (s, class) = api.post("/api/classes", &teacher, json!({ "name": "geometry" })).await;
    assert_eq!(s, StatusCode::CREATED);
    let class_id = class["class_id"].as_str().unwrap().to_string();
    let mut groups = Vec::new();
    let mut partition = Vec::new();
    for (g, size) in sizes.iter().enumerate() {
        let mut members = Vec::new();
        let mut ids = Vec::new();
        for i in 0..*size {
            let name = format!("{tag}-g{g}-s{i}");
            let (s, acct) = api
                .post(&format!("/api/classes/{class_id}/students"), &teacher, json!({ "username": name, "credential": "pw" }))
                .await;
            assert_eq!(s, StatusCode::CREATED, "{acct}");
            let id = acct["user_id"].as_str().unwrap().to_string();
            let (token, _) = api.login(&name, "pw").await;
            ids.push(id.clone());
            members.push((token, id));
        }
        partition.push(ids);
        groups.push(members);
    }
    let (s, body) = api.post(&format!("/api/classes/{class_id}/groups"), &teacher, json!({ "groups": partition })).await;
    assert_eq!(s, StatusCode::OK, "{body}");
    Room { admin, teacher, teacher_id: tid, class_id, groups }
}

pub fn group_of(session: &Value, user_id: &str) -> String {
    session["groups"]
        .as_array()
        .unwrap()
        .iter()
        .find(|g| g["members"].as_array().unwrap().iter().any(|m| m == user_id))
        .unwrap()["group_id"]
        .as_str()
        .unwrap()
        .to_string()
}

pub fn points_payload(n: usize) -> String {
    let mut c = geolab_geometry::Construction::new();
    for i in 0..n {
        c = c.add_point(i as f64, 1.0).unwrap().0;
    }
    String::from_utf8(geolab_geometry::serialize_construction(&c)).unwrap()
}
