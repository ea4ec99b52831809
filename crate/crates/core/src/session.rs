//! Live training sessions over newline-delimited JSON.
//!
//! Client messages carry a `kind` field: `input` (`move` in meters,
//! optional `calmness`), `reset`, `pause`, `resume`. The engine answers every
//! tick with a `state` message holding the trace-row fields plus the
//! trainee's position, and answers malformed lines with an `error` message.
//!
//! [`Session`] is the synchronous core; [`serve`] wraps it in a TCP service
//! with a tick clock. Inputs are mailboxed and the latest one wins.

use std::io::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;

use crate::engine::{Engine, LiveInput};
use crate::error::{Error, Result};
use crate::scenario::{EventAction, Mode, Scenario, TimedEvent};
use crate::trace::TraceRow;

pub const DEFAULT_TICK_MS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Input {
        #[serde(rename = "move", default)]
        displacement: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        calmness: Option<f64>,
    },
    Reset,
    Pause,
    Resume,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerMessage {
    State {
        #[serde(flatten)]
        row: TraceRow,
        trainee_position: f64,
    },
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

/// One consumed input, as written by `--record`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub tick: u64,
    #[serde(rename = "move")]
    pub displacement: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calmness: Option<f64>,
}

#[derive(Debug)]
pub struct Session {
    engine: Engine,
    mailbox: Option<InputRecord>,
    paused: bool,
    log: Vec<InputRecord>,
    resets: u64,
}

impl Session {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        if scenario.mode != Mode::ClosedLoop {
            return Err(Error::Config(
                "live sessions need a closed_loop scenario".into(),
            ));
        }
        Ok(Self {
            engine: Engine::new(scenario)?,
            mailbox: None,
            paused: false,
            log: Vec::new(),
            resets: 0,
        })
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    /// Number of `reset` messages handled so far.
    pub fn resets(&self) -> u64 {
        self.resets
    }

    /// Inputs consumed so far, in tick order.
    pub fn log(&self) -> &[InputRecord] {
        &self.log
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Result<()> {
        match msg {
            ClientMessage::Input {
                displacement,
                calmness,
            } => {
                if !displacement.is_finite() {
                    return Err(Error::domain("move", displacement, "a finite number"));
                }
                if let Some(c) = calmness {
                    if !(0.0..=1.0).contains(&c) {
                        return Err(Error::domain("calmness", c, "[0, 1]"));
                    }
                }
                self.mailbox = Some(InputRecord {
                    tick: 0,
                    displacement,
                    calmness,
                });
            }
            ClientMessage::Reset => {
                self.engine.reset();
                self.mailbox = None;
                self.log.clear();
                self.resets += 1;
            }
            ClientMessage::Pause => self.paused = true,
            ClientMessage::Resume => self.paused = false,
        }
        Ok(())
    }

    /// Handles one raw protocol line; returns an error reply for bad input.
    pub fn handle_line(&mut self, line: &str) -> Option<ServerMessage> {
        let line = line.trim();
        if line.is_empty() {
            return None;
        }
        let message = match serde_json::from_str::<ClientMessage>(line) {
            Ok(msg) => self.handle(msg).err()?.to_string(),
            Err(e) => format!("malformed message: {e}"),
        };
        Some(ServerMessage::Error { message })
    }

    /// Advances one tick unless paused, consuming the mailboxed input.
    pub fn tick(&mut self) -> Result<Option<(ServerMessage, Option<InputRecord>)>> {
        if self.paused {
            return Ok(None);
        }
        let consumed = self.mailbox.take().map(|mut rec| {
            rec.tick = self.engine.world().tick;
            rec
        });
        let live = consumed.map(|r| LiveInput {
            trainee_move: Some(r.displacement),
            calmness: r.calmness,
        });
        let row = self.engine.step(live)?;
        if let Some(rec) = consumed {
            self.log.push(rec);
        }
        let msg = ServerMessage::State {
            row,
            trainee_position: self.engine.world().trainee_position,
        };
        Ok(Some((msg, consumed)))
    }
}

/// A scenario whose scripted events reproduce a recorded input log, so a
/// batch run yields the same rows as the live session did.
pub fn scenario_from_log(base: &Scenario, log: &[InputRecord], duration: u64) -> Scenario {
    let mut s = base.clone();
    s.duration = duration;
    for rec in log {
        s.events.retain(|e| {
            !(e.tick == rec.tick
                && (matches!(e.action, EventAction::TraineeMove(_))
                    || (rec.calmness.is_some() && matches!(e.action, EventAction::SetCalmness(_)))))
        });
        s.events.push(TimedEvent::new(
            rec.tick,
            EventAction::TraineeMove(rec.displacement),
        ));
        if let Some(c) = rec.calmness {
            s.events
                .push(TimedEvent::new(rec.tick, EventAction::SetCalmness(c)));
        }
    }
    s.events.retain(|e| e.tick < duration);
    s.canonicalize();
    s
}

pub fn parse_input_log(text: &str) -> Result<Vec<InputRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::Config(format!("input log line {}: {e}", i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub tick: Duration,
    pub record: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            tick: Duration::from_millis(DEFAULT_TICK_MS),
            record: None,
        }
    }
}

/// Binds `127.0.0.1:<port>` and serves sessions one client at a time.
pub async fn serve(scenario: Scenario, port: u16, opts: ServeOptions) -> Result<()> {
    let listener = TcpListener::bind(("127.0.0.1", port)).await?;
    serve_listener(listener, scenario, opts).await
}

pub async fn serve_listener(
    listener: TcpListener,
    scenario: Scenario,
    opts: ServeOptions,
) -> Result<()> {
    // Fail early on a scenario that cannot host a session.
    Session::new(&scenario)?;
    loop {
        let (stream, _) = listener.accept().await?;
        if let Err(e) = run_session(stream, &scenario, &opts).await {
            eprintln!("session ended: {e}");
        }
    }
}

/// Drives one client until it disconnects. The reader task only forwards
/// lines; the tick loop owns the session.
pub async fn run_session(
    stream: TcpStream,
    scenario: &Scenario,
    opts: &ServeOptions,
) -> Result<()> {
    let mut session = Session::new(scenario)?;
    // The log always describes the current run: it starts empty and is
    // emptied again on reset.
    let mut recorder = match &opts.record {
        Some(path) => {
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)?;
            file.set_len(0)?;
            Some(file)
        }
        None => None,
    };

    let (read_half, mut write_half) = stream.into_split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let reader = tokio::spawn(async move {
        let mut lines = BufReader::new(read_half).lines();
        while let Ok(Some(line)) = lines.next_line().await {
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let mut clock = tokio::time::interval(opts.tick);
    clock.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let outcome = loop {
        tokio::select! {
            line = rx.recv() => {
                let Some(line) = line else { break Ok(()) };
                let resets = session.resets();
                let reply = session.handle_line(&line);
                if session.resets() != resets {
                    if let Some(file) = recorder.as_mut() {
                        file.set_len(0)?;
                    }
                }
                if let Some(reply) = reply {
                    if write_line(&mut write_half, &reply).await.is_err() {
                        break Ok(());
                    }
                }
            }
            _ = clock.tick() => {
                let Some((msg, consumed)) = session.tick()? else { continue };
                if let (Some(file), Some(rec)) = (recorder.as_mut(), consumed) {
                    writeln!(file, "{}", serde_json::to_string(&rec).expect("record serializes"))?;
                }
                if write_line(&mut write_half, &msg).await.is_err() {
                    break Ok(());
                }
            }
        }
    };
    reader.abort();
    outcome
}

async fn write_line(
    w: &mut tokio::net::tcp::OwnedWriteHalf,
    msg: &ServerMessage,
) -> std::io::Result<()> {
    let mut line = msg.to_line();
    line.push('\n');
    w.write_all(line.as_bytes()).await
}
