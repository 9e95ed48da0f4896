use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datastore::{gen_synthetic, load_csv, Schema, SyntheticSpec, Table};
use crate::roles::{
    ClientPhase, ClientState, MediatorState, Participant, ProviderState, RoleError,
};
use crate::seed::rng_for;
use crate::transport::{simnet_run, Direction, Input, Party, SimTime, Transcript};

use super::config::{ProviderSource, RunConfig};
use super::{write_file, CliError};

pub const CLIENT_TOKEN: &str = "client";
pub const MEDIATOR_TOKEN: &str = "mediator";

/// Load or generate one provider's table.
pub fn load_source(src: &ProviderSource) -> Result<Table, CliError> {
    let schema = Schema::hospital();
    match (&src.csv, &src.synthetic) {
        (Some(path), None) => Ok(load_csv(path, &schema)?),
        (None, Some(s)) => {
            let spec = s.spec.clone().unwrap_or_else(SyntheticSpec::hospital);
            Ok(gen_synthetic(s.n, s.seed, &schema, &spec)?)
        }
        _ => Err(CliError::Config(format!(
            "provider {} needs exactly one of csv or synthetic",
            src.identity
        ))),
    }
}

/// Everything a simulated session produced, before anything touches disk.
pub struct SessionRun {
    /// The mediator's log as captured by the network.
    pub transcript: Transcript,
    pub client: ClientState,
    pub mediator: MediatorState,
    pub providers: Vec<ProviderState>,
    /// Source tables by provider identity.
    pub sources: BTreeMap<String, Table>,
    /// Step errors per party, in the order they occurred.
    pub errors: BTreeMap<Party, Vec<RoleError>>,
    pub end_time_us: SimTime,
    pub steps: usize,
}

impl SessionRun {
    /// `Ok` with the consolidated table, or the error the client ended on.
    pub fn outcome(&self) -> Result<&Table, CliError> {
        if let Some(t) = self.client.result() {
            return Ok(t);
        }
        let client_err = self
            .errors
            .get(self.client.party())
            .and_then(|e| e.first());
        Err(match client_err {
            Some(RoleError::NoProviders) => CliError::NoProviders,
            Some(RoleError::PartialProviderFailure(r)) => CliError::PartialProviderFailure(r.clone()),
            Some(e @ RoleError::DecryptFailure { .. }) => CliError::DecryptFailure(e.to_string()),
            Some(e) => CliError::PartialProviderFailure(e.to_string()),
            None => CliError::PartialProviderFailure(format!(
                "session ended with the client in phase {:?}",
                self.client.phase()
            )),
        })
    }

    /// Number of envelopes of each type the mediator received.
    pub fn inbound_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for e in self.transcript.entries() {
            if e.direction == Direction::Inbound {
                *counts.entry(e.envelope.msg_type.to_string()).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// Run one session in the simulator without writing anything.
pub fn run_session(cfg: &RunConfig) -> Result<SessionRun, CliError> {
    cfg.validate()?;
    let schema = Schema::hospital();
    let mediator_party = Party::mediator(MEDIATOR_TOKEN);

    let mut sources = BTreeMap::new();
    for src in &cfg.providers {
        sources.insert(src.identity.clone(), load_source(src)?);
    }

    let mut nodes = BTreeMap::new();
    let mut mediator = MediatorState::new(MEDIATOR_TOKEN, cfg.timeouts, rng_for(cfg.seed, "mediator"));
    for (id, table) in &sources {
        mediator.register(id.clone());
        let rng = rng_for(cfg.seed, &format!("provider/{id}"));
        let p = ProviderState::new(id.clone(), mediator_party.clone(), table.clone(), cfg.policy.clone(), rng)
            .map_err(|e| CliError::Config(e.to_string()))?;
        nodes.insert(p.party().clone(), Participant::provider(p));
    }
    nodes.insert(mediator_party.clone(), Participant::mediator(mediator));
    let client = ClientState::new(CLIENT_TOKEN, mediator_party.clone(), schema, cfg.m, rng_for(cfg.seed, "client"))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let client_party = client.party().clone();
    nodes.insert(client_party.clone(), Participant::client(client, cfg.query.clone()));

    let outcome = simnet_run(nodes, mediator_party.clone(), vec![(client_party.clone(), Input::Start)], cfg.sim_config())?;

    let mut errors = BTreeMap::new();
    let mut client = None;
    let mut mediator = None;
    let mut providers = Vec::new();
    for (party, node) in outcome.nodes {
        if !node.errors.is_empty() {
            errors.insert(party.clone(), node.errors);
        }
        match node.role {
            crate::roles::ParticipantRole::Client(c, _) => client = Some(c),
            crate::roles::ParticipantRole::Mediator(m) => mediator = Some(m),
            crate::roles::ParticipantRole::Provider(p) => providers.push(p),
        }
    }
    Ok(SessionRun {
        transcript: outcome.transcript,
        client: client.expect("client node"),
        mediator: mediator.expect("mediator node"),
        providers,
        sources,
        errors,
        end_time_us: outcome.end_time,
        steps: outcome.steps,
    })
}

/// Summary written next to the result as `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub m: usize,
    pub n: Option<usize>,
    pub status: String,
    pub result_rows: usize,
    pub result_path: PathBuf,
    pub transcript_path: PathBuf,
    pub inbound_messages: BTreeMap<String, usize>,
    pub mediator_notes: Vec<String>,
    pub sim_end_time_us: SimTime,
    pub sim_steps: usize,
    pub wall_time_ms: u128,
}

/// Run a session and write `result.csv`, `transcript.jsonl` and
/// `report.json` into `out_dir`. The files are written on failure too; the
/// result is then empty.
pub fn run_end_to_end(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let run = run_session(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    let result_path = out_dir.join("result.csv");
    let transcript_path = out_dir.join("transcript.jsonl");
    let outcome = run.outcome();
    let (csv, rows) = match &outcome {
        Ok(t) => (t.to_csv_bytes(), t.len()),
        Err(_) => (Vec::new(), 0),
    };
    write_file(&result_path, &csv)?;
    write_file(&transcript_path, &run.transcript.to_jsonl_bytes())?;

    let report = RunReport {
        seed: cfg.seed,
        m: cfg.m,
        n: run.client.n(),
        status: match &outcome {
            Ok(_) if run.client.phase() == ClientPhase::Done => "ok".into(),
            Ok(_) => "incomplete".into(),
            Err(e) => e.to_string(),
        },
        result_rows: rows,
        result_path,
        transcript_path,
        inbound_messages: run.inbound_counts(),
        mediator_notes: run.mediator.notes().to_vec(),
        sim_end_time_us: run.end_time_us,
        sim_steps: run.steps,
        wall_time_ms: started.elapsed().as_millis(),
    };
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    write_file(&out_dir.join("report.json"), &json)?;
    outcome.map(|_| report)
}
