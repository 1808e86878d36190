use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::{ClassId, ConstructionId, GroupId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Administrator,
    Teacher,
    Student,
    Anonymous,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Administrator, Role::Teacher, Role::Student, Role::Anonymous];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccountStatus {
    Pending,
    Active,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAccount {
    pub user_id: UserId,
    pub username: String,
    /// PHC-format salted hash; never the credential itself.
    pub credential_digest: String,
    pub role: Role,
    pub teacher_id: Option<UserId>,
    pub status: AccountStatus,
    pub created_ts: i64,
}

impl UserAccount {
    /// Account view without the digest, for API responses.
    pub fn public(&self) -> PublicAccount {
        PublicAccount {
            user_id: self.user_id.clone(),
            username: self.username.clone(),
            role: self.role,
            teacher_id: self.teacher_id.clone(),
            status: self.status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicAccount {
    pub user_id: UserId,
    pub username: String,
    pub role: Role,
    pub teacher_id: Option<UserId>,
    pub status: AccountStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoolClass {
    pub class_id: ClassId,
    pub teacher_id: UserId,
    pub name: String,
    pub member_student_ids: BTreeSet<UserId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkGroup {
    pub group_id: GroupId,
    pub class_id: ClassId,
    pub member_student_ids: BTreeSet<UserId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionRecord {
    pub construction_id: ConstructionId,
    pub owner_id: UserId,
    pub title: String,
    /// Canonical construction text.
    pub payload: String,
    pub shared: bool,
    pub created_ts: i64,
    pub modified_ts: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoginEvent {
    LoginSuccess,
    LoginFailure,
    Logout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoginLogEntry {
    /// Absent when the username did not match any account.
    pub user_id: Option<UserId>,
    pub username: String,
    pub ts: i64,
    pub event: LoginEvent,
}

/// The authenticated caller of an operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Principal {
    pub user_id: UserId,
    pub role: Role,
    pub teacher_id: Option<UserId>,
}

impl Principal {
    pub fn anonymous() -> Self {
        Principal {
            user_id: UserId::anonymous(),
            role: Role::Anonymous,
            teacher_id: None,
        }
    }
}
