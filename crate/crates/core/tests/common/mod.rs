#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use geolab_core::accounts::{Accounts, AccountsConfig, HashCost, Principal};
use geolab_core::ids::{ClassId, UserId};
use geolab_core::Clock;
use geolab_geometry::{serialize_construction, Construction, StepKind};
use geolab_store::{Store, StoreOptions};

pub fn open_accounts(dir: &Path, clock: Arc<dyn Clock>) -> Accounts {
    let store = Store::open_with(dir, StoreOptions { sync: false, faults: None }).unwrap();
    let config = AccountsConfig {
        pepper: b"test-pepper".to_vec(),
        hash_cost: HashCost::FAST,
        ..Default::default()
    };
    Accounts::new(store, clock, config)
}

/// A teacher with one class split into groups of students.
pub struct Classroom {
    pub admin: Principal,
    pub teacher: Principal,
    pub class_id: ClassId,
    /// Students per group, in group order.
    pub groups: Vec<Vec<Principal>>,
}

impl Classroom {
    pub fn student(&self, group: usize, index: usize) -> &Principal {
        &self.groups[group][index]
    }
}

pub fn classroom(accounts: &Accounts, tag: &str, sizes: &[usize]) -> Classroom {
    let admin = match accounts.user_by_name("root").unwrap() {
        Some(_) => accounts.authenticate("root", "rootpw").unwrap().1,
        None => {
            accounts.bootstrap_admin("root", "rootpw").unwrap();
            accounts.authenticate("root", "rootpw").unwrap().1
        }
    };
    let tname = format!("teacher-{tag}");
    let t = accounts.register_teacher(&tname, "pw").unwrap();
    accounts.confirm_teacher(&admin, &t.user_id).unwrap();
    let teacher = accounts.authenticate(&tname, "pw").unwrap().1;
    let class = accounts.create_class(&teacher, "geometry").unwrap();
    let mut partition: Vec<BTreeSet<UserId>> = Vec::new();
    let mut names = Vec::new();
    for (g, size) in sizes.iter().enumerate() {
        let mut set = BTreeSet::new();
        let mut group_names = Vec::new();
        for i in 0..*size {
            let name = format!("{tag}-g{g}-s{i}");
            let s = accounts.create_student(&teacher, &class.class_id, &name, "pw").unwrap();
            set.insert(s.user_id);
            group_names.push(name);
        }
        partition.push(set);
        names.push(group_names);
    }
    accounts.form_groups(&teacher, &class.class_id, &partition).unwrap();
    let mut groups = Vec::new();
    for group_names in names {
        groups.push(
            group_names
                .iter()
                .map(|n| accounts.authenticate(n, "pw").unwrap().1)
                .collect(),
        );
    }
    Classroom { admin, teacher, class_id: class.class_id, groups }
}

pub fn payload_with_points(n: usize) -> String {
    let mut c = Construction::new();
    for i in 0..n {
        c = c.add_point(i as f64, 0.0).unwrap().0;
    }
    String::from_utf8(serialize_construction(&c)).unwrap()
}

pub fn midpoint_payload() -> String {
    let (c, a) = Construction::new().add_point(0.0, 0.0).unwrap();
    let (c, b) = c.add_point(2.0, 0.0).unwrap();
    let (c, _) = c.add_step(StepKind::Midpoint, &[a, b], &[]).unwrap();
    String::from_utf8(serialize_construction(&c)).unwrap()
}
