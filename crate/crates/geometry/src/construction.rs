use std::collections::BTreeSet;

use crate::error::ConstructionError;
use crate::step::{ConstructionStep, StepId, StepKind, ValueKind};

/// An ordered, dependency-closed list of construction steps.
///
/// Ids are strictly increasing along the list and every input refers to an
/// earlier step. The next id handed out is one past the last step's id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Construction {
    steps: Vec<ConstructionStep>,
}

impl Construction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> &[ConstructionStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn next_id(&self) -> StepId {
        StepId(self.steps.last().map_or(1, |s| s.id.0 + 1))
    }

    pub fn step(&self, id: StepId) -> Option<&ConstructionStep> {
        self.position(id).map(|i| &self.steps[i])
    }

    fn position(&self, id: StepId) -> Option<usize> {
        self.steps.binary_search_by_key(&id, |s| s.id).ok()
    }

    /// Appends a step, returning the new construction and the id it got.
    pub fn add_step(
        &self,
        kind: StepKind,
        inputs: &[StepId],
        params: &[f64],
    ) -> Result<(Construction, StepId), ConstructionError> {
        let expected = kind.input_kinds();
        if inputs.len() != expected.len() || params.len() != kind.param_count() {
            return Err(ConstructionError::ArityMismatch {
                kind: kind.name(),
                expected: expected.len(),
                got: inputs.len(),
                expected_params: kind.param_count(),
                got_params: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ConstructionError::NonFiniteParam);
        }
        for (&input, &want) in inputs.iter().zip(expected) {
            let step = self
                .step(input)
                .ok_or(ConstructionError::UnknownInput(input))?;
            let found = step.kind.output_kind();
            if found != want {
                return Err(ConstructionError::KindMismatch {
                    kind: kind.name(),
                    input,
                    expected: want,
                    found,
                });
            }
        }
        let id = self.next_id();
        let mut next = self.clone();
        next.steps.push(ConstructionStep {
            id,
            kind,
            inputs: inputs.to_vec(),
            params: params.to_vec(),
        });
        Ok((next, id))
    }

    /// Convenience wrapper for adding a free point.
    pub fn add_point(&self, x: f64, y: f64) -> Result<(Construction, StepId), ConstructionError> {
        self.add_step(StepKind::FreePoint, &[], &[x, y])
    }

    /// Removes `id` and everything that transitively depends on it.
    /// Removed ids are returned in ascending order.
    pub fn remove_step_cascade(
        &self,
        id: StepId,
    ) -> Result<(Construction, Vec<StepId>), ConstructionError> {
        let start = self.position(id).ok_or(ConstructionError::UnknownStep(id))?;
        // Dependents always come later in the list, so one forward sweep
        // collects the whole closure.
        let mut removed = BTreeSet::from([id]);
        for step in &self.steps[start + 1..] {
            if step.inputs.iter().any(|i| removed.contains(i)) {
                removed.insert(step.id);
            }
        }
        let steps = self
            .steps
            .iter()
            .filter(|s| !removed.contains(&s.id))
            .cloned()
            .collect();
        Ok((Construction { steps }, removed.into_iter().collect()))
    }

    /// Moves a free point. Only that step's params change.
    pub fn move_free_point(&self, id: StepId, x: f64, y: f64) -> Result<Construction, ConstructionError> {
        let pos = self.position(id).ok_or(ConstructionError::UnknownStep(id))?;
        if self.steps[pos].kind != StepKind::FreePoint {
            return Err(ConstructionError::NotFreePoint(id));
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(ConstructionError::NonFiniteParam);
        }
        let mut next = self.clone();
        next.steps[pos].params = vec![x, y];
        Ok(next)
    }

    /// Builds a construction from steps, checking every invariant.
    pub(crate) fn from_steps(steps: Vec<ConstructionStep>) -> Result<Construction, String> {
        let mut kinds: Vec<(StepId, ValueKind)> = Vec::with_capacity(steps.len());
        let mut last: Option<StepId> = None;
        for step in &steps {
            if step.id.0 == 0 {
                return Err("step ids must be positive".into());
            }
            if let Some(prev) = last {
                if step.id <= prev {
                    return Err(format!("step id {} is duplicate or out of order", step.id));
                }
            }
            let expected = step.kind.input_kinds();
            if step.inputs.len() != expected.len() || step.params.len() != step.kind.param_count() {
                return Err(format!("step {} has the wrong arity for {}", step.id, step.kind.name()));
            }
            if step.params.iter().any(|p| !p.is_finite()) {
                return Err(format!("step {} has a non-finite parameter", step.id));
            }
            for (input, want) in step.inputs.iter().zip(expected) {
                let found = kinds
                    .binary_search_by_key(input, |(id, _)| *id)
                    .map(|i| kinds[i].1)
                    .map_err(|_| format!("step {} references {} which does not precede it", step.id, input))?;
                if found != *want {
                    return Err(format!("step {} input {} must be a {}, found {}", step.id, input, want, found));
                }
            }
            kinds.push((step.id, step.kind.output_kind()));
            last = Some(step.id);
        }
        Ok(Construction { steps })
    }
}
