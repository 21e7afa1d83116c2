use crate::names::{Name, NameComponent};
use crate::packets::{Data, Interest, SWITCH_OFF, SWITCH_ON};

use super::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actuation {
    On,
    Off,
}

impl Actuation {
    pub fn as_str(self) -> &'static str {
        match self {
            Actuation::On => "ON",
            Actuation::Off => "OFF",
        }
    }
}

/// A light bulb behind an actuator. It answers `<registered prefix>/<command>`
/// and ignores everything else that reaches it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightNode {
    pub own_id: NameComponent,
    pub registered_prefixes: Vec<Name>,
    pub ack_freshness_ms: u64,
    state: Actuation,
}

impl LightNode {
    pub fn new(own_id: NameComponent, registered_prefixes: Vec<Name>, ack_freshness_ms: u64) -> Self {
        Self {
            own_id,
            registered_prefixes,
            ack_freshness_ms,
            state: Actuation::Off,
        }
    }

    pub fn state(&self) -> Actuation {
        self.state
    }

    /// Executes a command addressed to one of the registered prefixes and
    /// returns the ACK, named by appending the light ID to the Interest
    /// name. Repeated commands are idempotent but still acknowledged.
    pub fn on_command(&mut self, interest: &Interest) -> Result<Option<(Actuation, Data)>, AppError> {
        let name = &interest.name;
        let Some(prefix) = self
            .registered_prefixes
            .iter()
            .find(|p| name.len() == p.len() + 1 && p.is_prefix_of(name))
        else {
            return Ok(None);
        };
        let command = name.last().expect("longer than a prefix");
        let actuation = match command.as_str() {
            SWITCH_ON => Actuation::On,
            SWITCH_OFF => Actuation::Off,
            _ => {
                return Err(AppError::UnknownCommand {
                    prefix: prefix.clone(),
                    command: command.clone(),
                })
            }
        };
        self.state = actuation;
        let ack = Data::new(name.append(self.own_id.clone()), "ACK", self.ack_freshness_ms);
        Ok(Some((actuation, ack)))
    }
}
