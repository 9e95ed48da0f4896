//! Privacy-preserving sharing of medical records between hospitals.
//!
//! A client asks a mediator for records matching a query. The mediator
//! forwards the query to every hospital under a fresh alias, so the client
//! never learns which hospitals answered and the mediator never sees the
//! data. Each answering hospital perturbs sensitive numeric columns with
//! additive noise and encrypts its rows so that only the client can read
//! them, using a key the hospital itself cannot single out.
//!
//! - [`datastore`]: schema, tables, CSV, queries, synthetic data
//! - [`perturb`]: additive noise and moment recovery
//! - [`keyprotocol`]: oblivious key selection and multi-encryption
//! - [`transport`]: envelopes, transcripts, deterministic network simulator
//! - [`roles`]: client, mediator and provider state machines
//! - [`cli`]: run configs, end-to-end runs, audits, experiments

mod b64;
pub mod cli;
pub mod datastore;
pub mod keyprotocol;
pub mod perturb;
pub mod roles;
pub mod seed;
pub mod transport;
