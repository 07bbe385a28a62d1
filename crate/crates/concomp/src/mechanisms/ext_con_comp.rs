//! Extended concurrent composition: creates children on demand and routes queries to them.

use std::sync::Arc;

use crate::error::Result;
use crate::message::{CreationQuery, Message};
use crate::protocol::{Branch, MechBranches, Mechanism, MechanismHandle};
use crate::rng::StreamRng;
use crate::verification::Registry;

use super::noise::NoiseSource;

/// One recorded interaction with a child.
#[derive(Clone, Debug, PartialEq)]
pub enum ChildEvent {
    Created { index: usize, query: CreationQuery },
    Input { index: usize, input: Message, answer: Message },
}

#[derive(Clone)]
pub struct ExtConComp {
    registry: Arc<Registry>,
    noise: NoiseSource,
    children: Vec<MechanismHandle>,
    halted: bool,
    log: Option<Vec<ChildEvent>>,
}

impl ExtConComp {
    pub fn new(registry: Arc<Registry>, noise: NoiseSource) -> Self {
        ExtConComp { registry, noise, children: Vec::new(), halted: false, log: None }
    }

    /// Same, but keeps a log of every creation and child input.
    pub fn recording(registry: Arc<Registry>, noise: NoiseSource) -> Self {
        ExtConComp { log: Some(Vec::new()), ..Self::new(registry, noise) }
    }

    pub fn log(&self) -> &[ChildEvent] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn children(&self) -> usize {
        self.children.len()
    }

    fn record(&mut self, event: ChildEvent) {
        if let Some(log) = self.log.as_mut() {
            log.push(event);
        }
    }

    fn halt(&mut self) -> Message {
        self.halted = true;
        Message::Halt
    }
}

impl Mechanism for ExtConComp {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message> {
        if self.halted {
            return Ok(Message::Halt);
        }
        match msg {
            Message::Create(query) => match self.registry.build(query, &self.noise) {
                Ok(child) => {
                    self.children.push(child);
                    let index = self.children.len();
                    self.record(ChildEvent::Created { index, query: (**query).clone() });
                    Ok(Message::Ack)
                }
                Err(_) => Ok(self.halt()),
            },
            Message::Routed(q, index) if (1..=self.children.len()).contains(index) => {
                let answer = self.children[index - 1].step(q, rng)?;
                self.record(ChildEvent::Input { index: *index, input: (**q).clone(), answer: answer.clone() });
                if answer == Message::Halt {
                    self.halted = true;
                }
                Ok(answer)
            }
            _ => Ok(self.halt()),
        }
    }

    fn transitions(&self, msg: &Message) -> Result<MechBranches<f64>> {
        let mut next = self.clone();
        if self.halted {
            return Ok(vec![Branch { prob: 1.0, next: Box::new(next), out: Message::Halt }]);
        }
        match msg {
            Message::Create(query) => {
                let out = match self.registry.build(query, &self.noise) {
                    Ok(child) => {
                        next.children.push(child);
                        let index = next.children.len();
                        next.record(ChildEvent::Created { index, query: (**query).clone() });
                        Message::Ack
                    }
                    Err(_) => next.halt(),
                };
                Ok(vec![Branch { prob: 1.0, next: Box::new(next), out }])
            }
            Message::Routed(q, index) if (1..=self.children.len()).contains(index) => {
                let branches = self.children[index - 1].transitions(q)?;
                Ok(branches
                    .into_iter()
                    .map(|b| {
                        let mut n = self.clone();
                        n.children[index - 1] = b.next;
                        n.record(ChildEvent::Input { index: *index, input: (**q).clone(), answer: b.out.clone() });
                        n.halted = b.out == Message::Halt;
                        Branch { prob: b.prob, next: Box::new(n) as MechanismHandle, out: b.out }
                    })
                    .collect())
            }
            _ => {
                let out = next.halt();
                Ok(vec![Branch { prob: 1.0, next: Box::new(next), out }])
            }
        }
    }

    fn clone_box(&self) -> MechanismHandle {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        "ext_con_comp".into()
    }
}

pub fn ext_con_comp(noise: NoiseSource) -> MechanismHandle {
    Box::new(ExtConComp::new(Arc::new(Registry::standard()), noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{Flag, PrivacyParams};
    use crate::rng::stream_rng;

    #[test]
    fn create_then_route() {
        let comp = ext_con_comp(NoiseSource::Zero);
        let q = Message::create(CreationQuery::rr(PrivacyParams::new(3f64.ln(), 0.1).unwrap()));
        let created = comp.transitions(&q).unwrap();
        assert_eq!(created[0].out, Message::Ack);
        let answers = created[0].next.transitions(&Message::routed(Message::Int(0), 1)).unwrap();
        let probs: Vec<f64> = answers.iter().map(|b| b.prob).collect();
        assert!((probs[0] - 0.1).abs() < 1e-12 && (probs[1] - 0.675).abs() < 1e-12);
        assert_eq!(answers[0].out, Message::Rr(Flag::Exposed, 0));
    }

    #[test]
    fn unknown_index_halts() {
        let mut comp = ext_con_comp(NoiseSource::Zero);
        let mut rng = stream_rng(0, 0, 0);
        assert_eq!(comp.step(&Message::routed(Message::Int(0), 1), &mut rng).unwrap(), Message::Halt);
    }
}
