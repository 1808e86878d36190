//! The permission matrix. Every mutating platform operation asks
//! [`authorize`] before touching state.

use serde::{Deserialize, Serialize};

use super::model::{Principal, Role};
use crate::ids::UserId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    ConfirmTeacher,
    ViewLoginLog,
    CreateClass,
    ListClasses,
    CreateUser,
    FormGroups,
    OpenSession,
    CloseSession,
    JoinCollabSession,
    ClaimLock,
    ReleaseLock,
    ExportToGroup,
    ImportFromGroup,
    SaveIndividual,
    SaveScrapbook,
    PostChat,
    ReadChat,
    ObserveGroup,
    CreateConstruction,
    ReadConstruction,
    ModifyConstruction,
    ListSharedConstructions,
    StartRecording,
    AppendEvent,
    ListLogs,
    OpenReplay,
}

impl ActionKind {
    pub const ALL: [ActionKind; 26] = [
        ActionKind::ConfirmTeacher,
        ActionKind::ViewLoginLog,
        ActionKind::CreateClass,
        ActionKind::ListClasses,
        ActionKind::CreateUser,
        ActionKind::FormGroups,
        ActionKind::OpenSession,
        ActionKind::CloseSession,
        ActionKind::JoinCollabSession,
        ActionKind::ClaimLock,
        ActionKind::ReleaseLock,
        ActionKind::ExportToGroup,
        ActionKind::ImportFromGroup,
        ActionKind::SaveIndividual,
        ActionKind::SaveScrapbook,
        ActionKind::PostChat,
        ActionKind::ReadChat,
        ActionKind::ObserveGroup,
        ActionKind::CreateConstruction,
        ActionKind::ReadConstruction,
        ActionKind::ModifyConstruction,
        ActionKind::ListSharedConstructions,
        ActionKind::StartRecording,
        ActionKind::AppendEvent,
        ActionKind::ListLogs,
        ActionKind::OpenReplay,
    ];
}

/// Facts about the target of an action that the decision depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resource {
    Platform,
    Class { owner: UserId },
    /// `in_group` is whether the actor belongs to one of the session's groups
    /// (or to the group being addressed).
    Session { teacher: UserId, in_group: bool },
    Construction { owner: UserId, shared: bool },
    /// A recorded session; `teacher` is the student's linked teacher.
    Log { student: UserId, teacher: Option<UserId> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Allow,
    Deny,
}

impl Decision {
    pub fn is_allow(self) -> bool {
        self == Decision::Allow
    }
}

fn allow_if(cond: bool) -> Decision {
    if cond {
        Decision::Allow
    } else {
        Decision::Deny
    }
}

pub fn authorize(actor: &Principal, action: ActionKind, resource: &Resource) -> Decision {
    use ActionKind::*;
    let role = actor.role;
    let me = &actor.user_id;
    match (action, resource) {
        (ConfirmTeacher | ViewLoginLog, Resource::Platform) => allow_if(role == Role::Administrator),
        (CreateClass | ListClasses, Resource::Platform) => allow_if(role == Role::Teacher),
        (CreateUser | FormGroups | OpenSession, Resource::Class { owner }) => {
            allow_if(role == Role::Teacher && owner == me)
        }
        (CloseSession | ObserveGroup, Resource::Session { teacher, .. }) => {
            allow_if(role == Role::Teacher && teacher == me)
        }
        (JoinCollabSession | PostChat | ReadChat, Resource::Session { teacher, in_group }) => allow_if(
            (role == Role::Student && *in_group) || (role == Role::Teacher && teacher == me),
        ),
        (
            ClaimLock | ReleaseLock | ExportToGroup | ImportFromGroup | SaveIndividual | SaveScrapbook,
            Resource::Session { in_group, .. },
        ) => allow_if(role == Role::Student && *in_group),
        (CreateConstruction | ListSharedConstructions, Resource::Platform) => allow_if(role != Role::Anonymous),
        (ReadConstruction, Resource::Construction { owner, shared }) => {
            allow_if(owner == me || (*shared && role != Role::Anonymous))
        }
        (ModifyConstruction, Resource::Construction { owner, .. }) => {
            allow_if(owner == me && role != Role::Anonymous)
        }
        (StartRecording, Resource::Platform) => allow_if(matches!(role, Role::Student | Role::Anonymous)),
        (AppendEvent, Resource::Log { student, .. }) => {
            allow_if(matches!(role, Role::Student | Role::Anonymous) && student == me)
        }
        (ListLogs | OpenReplay, Resource::Log { teacher, .. }) => {
            allow_if(role == Role::Teacher && teacher.as_ref() == Some(me))
        }
        _ => Decision::Deny,
    }
}
