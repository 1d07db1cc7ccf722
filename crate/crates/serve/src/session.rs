//! One interactive session: a model owned by a single task that processes
//! its mailbox in order.
//!
//! Reset seeds are successive `next_u64() >> 1` draws from
//! `Rng::seed_from_u64(mix64(seed))`, where `seed` is the session seed the
//! first model was built with.

use std::sync::Arc;
use std::time::Duration;

use abm::rng::mix64;
use abm::Rng;
use abm_models::{Entry, Simulation, Snapshot};
use serde_json::Map;
use tokio::sync::{mpsc, watch};
use tokio::time::{Instant, Interval, MissedTickBehavior};

use crate::protocol::{config_overrides, from_json, to_json, Applies, ClientMessage, ParamView, ServerMessage};
use crate::ServerConfig;

/// Outbound side of one WebSocket.
#[derive(Debug)]
pub struct Connection {
    pub id: u64,
    /// Ordered, lossless.
    pub events: mpsc::UnboundedSender<ServerMessage>,
    /// Latest wins.
    pub snapshots: watch::Sender<Option<Arc<Snapshot>>>,
}

#[derive(Debug)]
pub enum Command {
    Attach(Connection),
    Detach(u64),
    /// A parsed client message, or the reason it could not be parsed.
    Client(u64, Result<ClientMessage, String>),
}

pub fn reset_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(mix64(seed))
}

pub struct Session {
    id: String,
    entry: Entry,
    sim: Box<dyn Simulation>,
    seed: u64,
    rng: Rng,
    series_step: u64,
    /// Series points and reset markers since the last `clear_series`.
    history: Vec<ServerMessage>,
    resets: Vec<u64>,
    playing: Option<f64>,
    conn: Option<Connection>,
    subscribed: bool,
    config: ServerConfig,
}

impl Session {
    pub fn new(id: String, entry: Entry, sim: Box<dyn Simulation>, seed: u64, config: ServerConfig) -> Self {
        let mut s = Session {
            id,
            entry,
            sim,
            seed,
            rng: reset_rng(seed),
            series_step: 0,
            history: Vec::new(),
            resets: Vec::new(),
            playing: None,
            conn: None,
            subscribed: false,
            config,
        };
        s.record_series();
        s
    }

    pub fn resets(&self) -> &[u64] {
        &self.resets
    }

    fn send(&self, msg: ServerMessage) {
        if let Some(c) = &self.conn {
            let _ = c.events.send(msg);
        }
    }

    fn publish_snapshot(&self) {
        if let (Some(c), true) = (&self.conn, self.subscribed) {
            c.snapshots.send_replace(Some(Arc::new(self.sim.snapshot())));
        }
    }

    fn record(&mut self, msg: ServerMessage) {
        if self.subscribed {
            self.send(msg.clone());
        }
        self.history.push(msg);
    }

    fn record_series(&mut self) {
        for (label, value) in self.sim.series_values() {
            let value = value.is_finite().then_some(value);
            self.record(ServerMessage::Series { label: label.into(), step: self.series_step, value });
        }
    }

    fn describe(&self) -> ServerMessage {
        let values: Map<_, _> = self.sim.properties().iter().map(|(k, v)| (k.to_string(), to_json(v))).collect();
        ServerMessage::Session {
            id: self.id.clone(),
            model: self.entry.name.into(),
            seed: self.seed,
            params: self.sim.param_specs().iter().map(ParamView::from).collect(),
            values,
            series: self.sim.series_labels().into_iter().map(String::from).collect(),
            step: self.sim.step_count(),
            series_step: self.series_step,
            playing: self.playing,
        }
    }

    fn advance(&mut self, n: u64) {
        for _ in 0..n {
            self.sim.step(1);
            self.series_step += 1;
            self.record_series();
        }
        self.publish_snapshot();
    }

    fn attach(&mut self, conn: Connection) {
        self.conn = Some(conn);
        self.subscribed = false;
        self.send(self.describe());
    }

    /// Handles one client message; every message is answered.
    pub fn handle(&mut self, msg: ClientMessage) {
        let of = msg.kind();
        let reply = match msg {
            ClientMessage::Create { model, config, seed } => self.create(&model, &config, seed),
            ClientMessage::Step { n } => {
                if n > self.config.max_step {
                    Err(("invalid_message".into(), format!("step n must be at most {}", self.config.max_step)))
                } else {
                    self.advance(n);
                    Ok(None)
                }
            }
            ClientMessage::Play { sps } => {
                if sps.is_finite() && sps > 0.0 && sps <= self.config.max_sps {
                    self.playing = Some(sps);
                    Ok(None)
                } else {
                    Err(("invalid_speed".into(), format!("sps must lie in (0, {}]", self.config.max_sps)))
                }
            }
            ClientMessage::Pause => {
                self.playing = None;
                Ok(None)
            }
            ClientMessage::SetParam { name, value } => self.set_param(&name, &value).map(Some),
            ClientMessage::Reset => self.reset().map(|_| None),
            ClientMessage::Subscribe => {
                self.subscribed = true;
                for m in &self.history {
                    self.send(m.clone());
                }
                self.publish_snapshot();
                Ok(None)
            }
            ClientMessage::ClearSeries => {
                self.history.clear();
                Ok(None)
            }
        };
        match reply {
            Ok(Some(m)) => self.send(m),
            Ok(None) => self.send(ServerMessage::ack(of)),
            Err((code, message)) => self.send(ServerMessage::error(&code, message, Some(of))),
        }
    }

    fn set_param(&mut self, name: &str, value: &serde_json::Value) -> Result<ServerMessage, (String, String)> {
        let v = from_json(value)
            .ok_or_else(|| ("param_wrong_type".to_string(), format!("value of `{name}` must be a scalar")))?;
        let live = self.sim.param_specs().iter().find(|p| p.name == name).is_some_and(|p| p.live);
        let v = self.sim.set_param(name, &v).map_err(|e| (e.code().to_string(), e.to_string()))?;
        let applies = if live { Applies::NextStep } else { Applies::OnReset };
        Ok(ServerMessage::ParamAck { name: name.into(), value: to_json(&v), applies })
    }

    fn reset(&mut self) -> Result<(), (String, String)> {
        let seed = self.rng.next_u64() >> 1;
        let props = self.sim.properties().clone();
        self.sim = self.entry.build_from(&props, seed).map_err(|e| (e.code().to_string(), e.to_string()))?;
        self.resets.push(self.series_step);
        self.record(ServerMessage::ResetMarker { step: self.series_step });
        self.series_step += 1;
        self.record_series();
        self.publish_snapshot();
        Ok(())
    }

    fn create(
        &mut self,
        model: &str,
        config: &Map<String, serde_json::Value>,
        seed: Option<u64>,
    ) -> Result<Option<ServerMessage>, (String, String)> {
        let entry = abm_models::find(model).ok_or_else(|| {
            let names = abm_models::registry::names().join(", ");
            ("unknown_model".to_string(), format!("unknown model `{model}` (available: {names})"))
        })?;
        let overrides = config_overrides(config)?;
        let seed = seed.unwrap_or_else(|| self.rng.next_u64() >> 1);
        self.sim = entry.build(&overrides, seed).map_err(|e| (e.code().to_string(), e.to_string()))?;
        self.entry = entry;
        self.seed = seed;
        self.rng = reset_rng(seed);
        self.series_step = 0;
        self.history.clear();
        self.resets.clear();
        self.playing = None;
        self.record_series();
        self.send(self.describe());
        self.publish_snapshot();
        Ok(None)
    }

    /// Runs the mailbox until the session has had no connection for the
    /// grace period or every handle is gone.
    pub async fn run(mut self, mut rx: mpsc::UnboundedReceiver<Command>) {
        enum Event {
            Cmd(Option<Command>),
            Tick,
            Expire,
        }
        let mut ticker: Option<(f64, Interval)> = None;
        let mut deadline = Some(Instant::now() + self.config.grace);
        loop {
            match (self.playing, &ticker) {
                (Some(sps), Some((cur, _))) if *cur == sps => {}
                (Some(sps), _) => {
                    let period = Duration::from_secs_f64(1.0 / sps);
                    let mut iv = tokio::time::interval_at(Instant::now() + period, period);
                    iv.set_missed_tick_behavior(MissedTickBehavior::Delay);
                    ticker = Some((sps, iv));
                }
                (None, _) => ticker = None,
            }
            let event = tokio::select! {
                cmd = rx.recv() => Event::Cmd(cmd),
                _ = tick(&mut ticker) => Event::Tick,
                _ = sleep_until(deadline) => Event::Expire,
            };
            match event {
                Event::Cmd(None) | Event::Expire => break,
                Event::Tick => self.advance(1),
                Event::Cmd(Some(Command::Attach(conn))) => {
                    deadline = None;
                    self.attach(conn);
                }
                Event::Cmd(Some(Command::Detach(id))) => {
                    if self.conn.as_ref().is_some_and(|c| c.id == id) {
                        self.conn = None;
                        self.subscribed = false;
                        deadline = Some(Instant::now() + self.config.grace);
                    }
                }
                Event::Cmd(Some(Command::Client(id, msg))) => {
                    if self.conn.as_ref().is_some_and(|c| c.id == id) {
                        match msg {
                            Ok(m) => self.handle(m),
                            Err(e) => self.send(ServerMessage::error("invalid_message", e, None)),
                        }
                    }
                }
            }
            // Keep other sessions on this worker responsive between steps.
            tokio::task::yield_now().await;
        }
        tracing::debug!(session = %self.id, "session closed");
    }
}

async fn tick(ticker: &mut Option<(f64, Interval)>) {
    match ticker {
        Some((_, iv)) => {
            iv.tick().await;
        }
        None => std::future::pending().await,
    }
}

async fn sleep_until(deadline: Option<Instant>) {
    match deadline {
        Some(d) => tokio::time::sleep_until(d).await,
        None => std::future::pending().await,
    }
}
