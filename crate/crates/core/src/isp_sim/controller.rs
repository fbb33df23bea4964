//! Dual-mode SSD controller bookkeeping. Only the mode and the effects the
//! cost model needs are tracked.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Conventional,
    Accelerator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Enter accelerator mode; FTL metadata is flushed first.
    Init,
    /// Persist `result_bytes` of mapping results and return to conventional mode.
    Write { result_bytes: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ControllerState {
    pub mode: Mode,
    pub metadata_flushed: bool,
    pub result_bytes_written: u64,
    pub flash_writes: u32,
}

impl ControllerState {
    pub fn apply(self, cmd: Command) -> Result<ControllerState> {
        match (self.mode, cmd) {
            (Mode::Conventional, Command::Init) => Ok(ControllerState {
                mode: Mode::Accelerator,
                metadata_flushed: true,
                ..self
            }),
            (Mode::Accelerator, Command::Init) => Err(Error::AlreadyInAcceleratorMode),
            (Mode::Accelerator, Command::Write { result_bytes }) => Ok(ControllerState {
                mode: Mode::Conventional,
                metadata_flushed: false,
                result_bytes_written: self.result_bytes_written + result_bytes,
                flash_writes: self.flash_writes + 1,
            }),
            (Mode::Conventional, Command::Write { .. }) => Err(Error::NotInAcceleratorMode),
        }
    }
}

/// Applies `cmd` to `state`.
pub fn mode_switch(state: ControllerState, cmd: Command) -> Result<ControllerState> {
    state.apply(cmd)
}
