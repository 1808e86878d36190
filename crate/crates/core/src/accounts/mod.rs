//! User accounts, classes, groups, construction records and the login log.

mod authz;
mod credential;
mod model;
mod tokens;

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use geolab_geometry::{parse_construction, serialize_construction};
use geolab_store::{Namespace, RecordKey, Store, StoreError, Transaction};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use authz::{authorize, ActionKind, Decision, Resource};
pub use credential::{CredentialHasher, HashCost};
pub use model::{
    AccountStatus, ConstructionRecord, LoginEvent, LoginLogEntry, Principal, PublicAccount, Role,
    SchoolClass, UserAccount, WorkGroup,
};
pub use tokens::{AuthToken, TokenTable};

use crate::clock::Clock;
use crate::ids::{ClassId, ConstructionId, GroupId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DenyReason {
    BadCredential,
    Pending,
}

#[derive(Debug, Error)]
pub enum AccountError {
    #[error("username already taken")]
    UsernameTaken,
    #[error("invalid username")]
    InvalidUsername,
    #[error("authentication denied: {0:?}")]
    AuthDenied(DenyReason),
    #[error("forbidden")]
    Forbidden,
    #[error("account is not pending")]
    NotPending,
    #[error("unknown user")]
    UnknownUser,
    #[error("unknown class")]
    UnknownClass,
    #[error("unknown construction")]
    UnknownConstruction,
    #[error("groups overlap")]
    OverlappingGroups,
    #[error("student {0} is not a member of the class")]
    NonMember(UserId),
    #[error("groups must not be empty")]
    EmptyGroup,
    #[error("invalid construction payload: {0}")]
    InvalidPayload(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("corrupt record: {0}")]
    Corrupt(#[from] serde_json::Error),
}

pub type AccountResult<T> = Result<T, AccountError>;

#[derive(Debug, Clone)]
pub struct AccountsConfig {
    pub pepper: Vec<u8>,
    pub hash_cost: HashCost,
    /// Idle expiry of auth tokens.
    pub token_idle_expiry_ms: i64,
}

impl Default for AccountsConfig {
    fn default() -> Self {
        AccountsConfig {
            pepper: Vec::new(),
            hash_cost: HashCost::DEFAULT,
            token_idle_expiry_ms: 12 * 60 * 60 * 1000,
        }
    }
}

/// Partial update of a construction record.
#[derive(Debug, Clone, Default)]
pub struct ConstructionUpdate {
    pub title: Option<String>,
    pub payload: Option<String>,
    pub shared: Option<bool>,
}

const LOGIN_LOG_STREAM: &str = "all";

fn user_key(id: &UserId) -> RecordKey {
    RecordKey::new(Namespace::Users, id.as_str())
}

fn username_key(name: &str) -> RecordKey {
    RecordKey::new(Namespace::Users, format!("name.{}", hex::encode(name.as_bytes())))
}

fn class_key(id: &ClassId) -> RecordKey {
    RecordKey::new(Namespace::Classes, id.as_str())
}

fn group_key(class: &ClassId, group: &GroupId) -> RecordKey {
    RecordKey::new(Namespace::Groups, format!("{class}.{group}"))
}

fn construction_key(id: &ConstructionId) -> RecordKey {
    RecordKey::new(Namespace::Constructions, id.as_str())
}

fn scrapbook_key(owner: &UserId, id: &ConstructionId) -> RecordKey {
    RecordKey::new(Namespace::Scrapbooks, format!("{owner}.{id}"))
}

fn login_log_key() -> RecordKey {
    RecordKey::new(Namespace::LoginLog, LOGIN_LOG_STREAM)
}

fn encode<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).expect("account records serialize")
}

fn validate_username(name: &str) -> AccountResult<()> {
    let ok = !name.trim().is_empty() && name.chars().count() <= 64 && !name.chars().any(char::is_control);
    if ok {
        Ok(())
    } else {
        Err(AccountError::InvalidUsername)
    }
}

/// Validates a construction payload and returns its canonical text.
pub fn canonical_payload(payload: &str) -> AccountResult<String> {
    let c = parse_construction(payload.as_bytes()).map_err(|e| AccountError::InvalidPayload(e.to_string()))?;
    Ok(String::from_utf8(serialize_construction(&c)).expect("canonical form is utf-8"))
}

pub struct Accounts {
    store: Store,
    clock: Arc<dyn Clock>,
    hasher: CredentialHasher,
    tokens: TokenTable,
    // account mutations are check-then-write; this serializes them
    write: Mutex<()>,
    last_login_ts: Mutex<i64>,
}

impl Accounts {
    pub fn new(store: Store, clock: Arc<dyn Clock>, config: AccountsConfig) -> Self {
        Accounts {
            store,
            clock,
            hasher: CredentialHasher::new(config.pepper, config.hash_cost),
            tokens: TokenTable::new(config.token_idle_expiry_ms),
            write: Mutex::new(()),
            last_login_ts: Mutex::new(i64::MIN),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn now_ms(&self) -> i64 {
        self.clock.now_ms()
    }

    fn load<T: DeserializeOwned>(&self, key: &RecordKey) -> AccountResult<Option<T>> {
        match self.store.get(key)? {
            Some(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            None => Ok(None),
        }
    }

    fn check(&self, actor: &Principal, action: ActionKind, resource: &Resource) -> AccountResult<()> {
        if authorize(actor, action, resource).is_allow() {
            Ok(())
        } else {
            Err(AccountError::Forbidden)
        }
    }

    pub fn user(&self, id: &UserId) -> AccountResult<Option<UserAccount>> {
        self.load(&user_key(id))
    }

    pub fn user_by_name(&self, username: &str) -> AccountResult<Option<UserAccount>> {
        let Some(id) = self.store.get(&username_key(username))? else {
            return Ok(None);
        };
        self.user(&UserId(String::from_utf8_lossy(&id).into_owned()))
    }

    fn insert_account(
        &self,
        username: &str,
        credential: &str,
        role: Role,
        teacher_id: Option<UserId>,
        status: AccountStatus,
        extra: impl FnOnce(&UserAccount) -> Transaction,
    ) -> AccountResult<UserAccount> {
        validate_username(username)?;
        if self.store.get(&username_key(username))?.is_some() {
            return Err(AccountError::UsernameTaken);
        }
        let account = UserAccount {
            user_id: UserId::generate(),
            username: username.to_string(),
            credential_digest: self.hasher.digest(credential),
            role,
            teacher_id,
            status,
            created_ts: self.now_ms(),
        };
        let txn = extra(&account)
            .put(user_key(&account.user_id), encode(&account))
            .put(username_key(username), account.user_id.as_str().as_bytes().to_vec());
        self.store.commit(txn)?;
        Ok(account)
    }

    /// Creates the administrator account if the username is not yet taken.
    pub fn bootstrap_admin(&self, username: &str, credential: &str) -> AccountResult<UserAccount> {
        let _w = self.write.lock().unwrap();
        if let Some(existing) = self.user_by_name(username)? {
            return if existing.role == Role::Administrator {
                Ok(existing)
            } else {
                Err(AccountError::UsernameTaken)
            };
        }
        self.insert_account(username, credential, Role::Administrator, None, AccountStatus::Active, |_| Transaction::new())
    }

    /// Self-registration of a teacher; the account stays Pending until an
    /// administrator confirms it.
    pub fn register_teacher(&self, username: &str, credential: &str) -> AccountResult<UserAccount> {
        let _w = self.write.lock().unwrap();
        self.insert_account(username, credential, Role::Teacher, None, AccountStatus::Pending, |_| Transaction::new())
    }

    pub fn confirm_teacher(&self, actor: &Principal, target: &UserId) -> AccountResult<UserAccount> {
        self.check(actor, ActionKind::ConfirmTeacher, &Resource::Platform)?;
        let _w = self.write.lock().unwrap();
        let mut account = self.user(target)?.ok_or(AccountError::UnknownUser)?;
        if account.role != Role::Teacher || account.status != AccountStatus::Pending {
            return Err(AccountError::NotPending);
        }
        account.status = AccountStatus::Active;
        self.store.put(user_key(target), encode(&account))?;
        Ok(account)
    }

    /// Pending teachers, for the administrator's confirmation queue.
    pub fn pending_teachers(&self, actor: &Principal) -> AccountResult<Vec<PublicAccount>> {
        self.check(actor, ActionKind::ConfirmTeacher, &Resource::Platform)?;
        let mut out = Vec::new();
        for id in self.store.list(Namespace::Users, "u-")? {
            if let Some(a) = self.user(&UserId(id))? {
                if a.role == Role::Teacher && a.status == AccountStatus::Pending {
                    out.push(a.public());
                }
            }
        }
        Ok(out)
    }

    pub fn class(&self, id: &ClassId) -> AccountResult<Option<SchoolClass>> {
        self.load(&class_key(id))
    }

    pub fn create_class(&self, actor: &Principal, name: &str) -> AccountResult<SchoolClass> {
        self.check(actor, ActionKind::CreateClass, &Resource::Platform)?;
        let class = SchoolClass {
            class_id: ClassId::generate(),
            teacher_id: actor.user_id.clone(),
            name: name.to_string(),
            member_student_ids: BTreeSet::new(),
        };
        self.store.put(class_key(&class.class_id), encode(&class))?;
        Ok(class)
    }

    pub fn list_classes(&self, actor: &Principal) -> AccountResult<Vec<SchoolClass>> {
        self.check(actor, ActionKind::ListClasses, &Resource::Platform)?;
        let mut out = Vec::new();
        for id in self.store.list(Namespace::Classes, "")? {
            if let Some(c) = self.class(&ClassId(id))? {
                if c.teacher_id == actor.user_id {
                    out.push(c);
                }
            }
        }
        Ok(out)
    }

    pub fn create_student(
        &self,
        actor: &Principal,
        class_id: &ClassId,
        username: &str,
        credential: &str,
    ) -> AccountResult<UserAccount> {
        let _w = self.write.lock().unwrap();
        let mut class = self.class(class_id)?.ok_or(AccountError::UnknownClass)?;
        self.check(actor, ActionKind::CreateUser, &Resource::Class { owner: class.teacher_id.clone() })?;
        self.insert_account(
            username,
            credential,
            Role::Student,
            Some(actor.user_id.clone()),
            AccountStatus::Active,
            |account| {
                class.member_student_ids.insert(account.user_id.clone());
                Transaction::new().put(class_key(class_id), encode(&class))
            },
        )
    }

    pub fn groups_of_class(&self, class_id: &ClassId) -> AccountResult<Vec<WorkGroup>> {
        let mut out = Vec::new();
        for id in self.store.list(Namespace::Groups, &format!("{class_id}."))? {
            if let Some(g) = self.load(&RecordKey::new(Namespace::Groups, id))? {
                out.push(g);
            }
        }
        Ok(out)
    }

    /// Replaces the class's groups with the given partition.
    pub fn form_groups(
        &self,
        actor: &Principal,
        class_id: &ClassId,
        partition: &[BTreeSet<UserId>],
    ) -> AccountResult<Vec<WorkGroup>> {
        let _w = self.write.lock().unwrap();
        let class = self.class(class_id)?.ok_or(AccountError::UnknownClass)?;
        self.check(actor, ActionKind::FormGroups, &Resource::Class { owner: class.teacher_id.clone() })?;
        let mut seen = BTreeSet::new();
        for set in partition {
            if set.is_empty() {
                return Err(AccountError::EmptyGroup);
            }
            for student in set {
                if !class.member_student_ids.contains(student) {
                    return Err(AccountError::NonMember(student.clone()));
                }
                if !seen.insert(student.clone()) {
                    return Err(AccountError::OverlappingGroups);
                }
            }
        }
        let mut txn = Transaction::new();
        for old in self.groups_of_class(class_id)? {
            txn = txn.delete(group_key(class_id, &old.group_id));
        }
        let groups: Vec<WorkGroup> = partition
            .iter()
            .map(|set| WorkGroup {
                group_id: GroupId::generate(),
                class_id: class_id.clone(),
                member_student_ids: set.clone(),
            })
            .collect();
        for g in &groups {
            txn = txn.put(group_key(class_id, &g.group_id), encode(g));
        }
        self.store.commit(txn)?;
        Ok(groups)
    }

    fn log_login(&self, user_id: Option<UserId>, username: &str, event: LoginEvent) -> AccountResult<()> {
        let mut last = self.last_login_ts.lock().unwrap();
        let ts = self.now_ms().max(*last);
        let entry = LoginLogEntry {
            user_id,
            username: username.to_string(),
            ts,
            event,
        };
        self.store.append(&login_log_key(), encode(&entry))?;
        *last = ts;
        Ok(())
    }

    pub fn authenticate(&self, username: &str, credential: &str) -> AccountResult<(AuthToken, Principal)> {
        let account = self.user_by_name(username)?;
        let verdict = match &account {
            None => {
                // keep timing similar for unknown names
                let _ = self.hasher.digest(credential);
                Err(DenyReason::BadCredential)
            }
            Some(a) if !self.hasher.verify(credential, &a.credential_digest) => Err(DenyReason::BadCredential),
            Some(a) if a.status == AccountStatus::Pending => Err(DenyReason::Pending),
            Some(a) => Ok(Principal {
                user_id: a.user_id.clone(),
                role: a.role,
                teacher_id: a.teacher_id.clone(),
            }),
        };
        let user_id = account.map(|a| a.user_id);
        match verdict {
            Ok(principal) => {
                self.log_login(user_id, username, LoginEvent::LoginSuccess)?;
                Ok((self.tokens.issue(principal.clone(), self.now_ms()), principal))
            }
            Err(reason) => {
                self.log_login(user_id, username, LoginEvent::LoginFailure)?;
                Err(AccountError::AuthDenied(reason))
            }
        }
    }

    pub fn login_anonymous(&self) -> AccountResult<(AuthToken, Principal)> {
        let principal = Principal::anonymous();
        self.log_login(Some(principal.user_id.clone()), "anonymous", LoginEvent::LoginSuccess)?;
        Ok((self.tokens.issue(principal.clone(), self.now_ms()), principal))
    }

    pub fn logout(&self, token: &AuthToken) -> AccountResult<()> {
        if let Some(p) = self.tokens.revoke(token) {
            let name = match self.user(&p.user_id)? {
                Some(a) => a.username,
                None => p.user_id.to_string(),
            };
            self.log_login(Some(p.user_id), &name, LoginEvent::Logout)?;
        }
        Ok(())
    }

    pub fn resolve(&self, token: &AuthToken) -> Option<Principal> {
        self.tokens.resolve(token, self.now_ms())
    }

    pub fn login_log(&self, actor: &Principal) -> AccountResult<Vec<LoginLogEntry>> {
        self.check(actor, ActionKind::ViewLoginLog, &Resource::Platform)?;
        self.store
            .read_stream(&login_log_key())?
            .iter()
            .map(|b| serde_json::from_slice(b).map_err(AccountError::from))
            .collect()
    }

    pub fn construction(&self, id: &ConstructionId) -> AccountResult<Option<ConstructionRecord>> {
        self.load(&construction_key(id))
    }

    pub fn create_construction(
        &self,
        actor: &Principal,
        title: &str,
        payload: &str,
        shared: bool,
    ) -> AccountResult<ConstructionRecord> {
        self.check(actor, ActionKind::CreateConstruction, &Resource::Platform)?;
        let payload = canonical_payload(payload)?;
        let now = self.now_ms();
        let record = ConstructionRecord {
            construction_id: ConstructionId::generate(),
            owner_id: actor.user_id.clone(),
            title: title.to_string(),
            payload,
            shared,
            created_ts: now,
            modified_ts: now,
        };
        self.store.put(construction_key(&record.construction_id), encode(&record))?;
        Ok(record)
    }

    pub fn update_construction(
        &self,
        actor: &Principal,
        id: &ConstructionId,
        update: ConstructionUpdate,
    ) -> AccountResult<ConstructionRecord> {
        let _w = self.write.lock().unwrap();
        let mut record = self.construction(id)?.ok_or(AccountError::UnknownConstruction)?;
        self.check(
            actor,
            ActionKind::ModifyConstruction,
            &Resource::Construction { owner: record.owner_id.clone(), shared: record.shared },
        )?;
        if let Some(p) = update.payload {
            record.payload = canonical_payload(&p)?;
        }
        if let Some(t) = update.title {
            record.title = t;
        }
        if let Some(s) = update.shared {
            record.shared = s;
        }
        record.modified_ts = self.now_ms().max(record.modified_ts);
        self.store.put(construction_key(id), encode(&record))?;
        Ok(record)
    }

    pub fn read_construction(&self, actor: &Principal, id: &ConstructionId) -> AccountResult<ConstructionRecord> {
        let record = self.construction(id)?.ok_or(AccountError::UnknownConstruction)?;
        self.check(
            actor,
            ActionKind::ReadConstruction,
            &Resource::Construction { owner: record.owner_id.clone(), shared: record.shared },
        )?;
        Ok(record)
    }

    fn all_constructions(&self) -> AccountResult<Vec<ConstructionRecord>> {
        let mut out = Vec::new();
        for id in self.store.list(Namespace::Constructions, "")? {
            if let Some(r) = self.construction(&ConstructionId(id))? {
                out.push(r);
            }
        }
        Ok(out)
    }

    pub fn list_own_constructions(&self, actor: &Principal) -> AccountResult<Vec<ConstructionRecord>> {
        self.check(actor, ActionKind::CreateConstruction, &Resource::Platform)?;
        Ok(self
            .all_constructions()?
            .into_iter()
            .filter(|r| r.owner_id == actor.user_id)
            .collect())
    }

    pub fn list_shared_constructions(&self, actor: &Principal) -> AccountResult<Vec<ConstructionRecord>> {
        self.check(actor, ActionKind::ListSharedConstructions, &Resource::Platform)?;
        Ok(self.all_constructions()?.into_iter().filter(|r| r.shared).collect())
    }

    /// Stores a private copy of a construction in the owner's scrapbook.
    /// Authorization is the caller's job (the session engine checks
    /// membership before calling).
    pub fn save_scrapbook(&self, owner: &UserId, title: &str, payload: &str) -> AccountResult<ConstructionRecord> {
        let payload = canonical_payload(payload)?;
        let now = self.now_ms();
        let record = ConstructionRecord {
            construction_id: ConstructionId::generate(),
            owner_id: owner.clone(),
            title: title.to_string(),
            payload,
            shared: false,
            created_ts: now,
            modified_ts: now,
        };
        let txn = Transaction::new()
            .put(construction_key(&record.construction_id), encode(&record))
            .put(scrapbook_key(owner, &record.construction_id), now.to_string().into_bytes());
        self.store.commit(txn)?;
        Ok(record)
    }

    pub fn scrapbook(&self, actor: &Principal) -> AccountResult<Vec<ConstructionRecord>> {
        let mut out = Vec::new();
        for id in self.store.list(Namespace::Scrapbooks, &format!("{}.", actor.user_id))? {
            let cid = id.rsplit('.').next().unwrap_or_default();
            if let Some(r) = self.construction(&ConstructionId(cid.to_string()))? {
                out.push(r);
            }
        }
        Ok(out)
    }
}
