//! Key-set exchange with oblivious selection.
//!
//! A provider offers `m` random symmetric keys. The client secretly picks
//! index `j` and answers with `m` ciphertexts: slot `j` carries its real
//! public key under `key_j`, every other slot a freshly generated decoy
//! public key under its own key. The provider opens all slots and sees `m`
//! equally distributed public keys, so it encrypts its result to each of
//! them. Only the client can open the one addressed to it.

mod hybrid;

use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::{CryptoRng, Rng, RngCore};
use serde::{Deserialize, Serialize};
use x25519_dalek::{PublicKey as XPublic, StaticSecret};

pub const KEY_LEN: usize = 32;
pub const PUBLIC_KEY_LEN: usize = 32;
const NONCE_LEN: usize = 12;
const SLOT_AAD: &[u8] = b"medshare/slot/v1";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KeyError {
    #[error("key set needs at least 2 keys, got {0}")]
    KeySetTooSmall(usize),
    #[error("index {index} out of range for {m} keys")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("alias mismatch: expected {expected}, found {found}")]
    AliasMismatch { expected: String, found: String },
    #[error("expected {expected} slots, found {found}")]
    SlotCountMismatch { expected: usize, found: usize },
    #[error("slot {slot} failed authentication")]
    TamperedResponse { slot: usize },
    #[error("slot {slot} does not hold a usable public key")]
    MalformedCandidate { slot: usize },
    #[error("need at least 2 candidate keys, got {0}")]
    TooFewCandidates(usize),
    #[error("no payload in the bundle opens with this key")]
    NoDecryptableEntry,
    #[error("{0} payloads open with this key")]
    MultipleDecryptable(usize),
}

/// Opaque per-session token standing in for a provider's identity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alias(pub String);

impl Alias {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Alias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Alias {
    fn from(s: &str) -> Self {
        Alias(s.to_string())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey([u8; KEY_LEN]);

impl SymmetricKey {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut k = [0u8; KEY_LEN];
        rng.fill_bytes(&mut k);
        Self(k)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }

    fn cipher(&self) -> ChaCha20Poly1305 {
        ChaCha20Poly1305::new(Key::from_slice(&self.0))
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymmetricKey({:02x}{:02x}..)", self.0[0], self.0[1])
    }
}

/// X25519 public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PublicKey(pub(crate) [u8; PUBLIC_KEY_LEN]);

impl PublicKey {
    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        bytes.try_into().ok().map(PublicKey)
    }

    pub fn as_bytes(&self) -> &[u8; PUBLIC_KEY_LEN] {
        &self.0
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey(")?;
        for b in &self.0[..4] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

/// The client's long-lived keypair for one session. The secret half never
/// leaves this struct.
#[derive(Clone)]
pub struct ClientKeypair {
    secret: StaticSecret,
    public: PublicKey,
}

impl ClientKeypair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        let secret = StaticSecret::from(bytes);
        let public = PublicKey(XPublic::from(&secret).to_bytes());
        Self { secret, public }
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    #[cfg(test)]
    pub(crate) fn secret(&self) -> &StaticSecret {
        &self.secret
    }

    /// Try to decrypt one payload addressed to this keypair.
    pub fn open(&self, ciphertext: &[u8]) -> Option<Vec<u8>> {
        hybrid::open(&self.secret, &self.public, ciphertext)
    }
}

impl fmt::Debug for ClientKeypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClientKeypair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

/// Ordered keys one provider offers the client.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySet {
    alias: Alias,
    keys: Vec<SymmetricKey>,
}

impl KeySet {
    pub fn new(alias: Alias, keys: Vec<SymmetricKey>) -> Result<Self, KeyError> {
        if keys.len() < 2 {
            return Err(KeyError::KeySetTooSmall(keys.len()));
        }
        Ok(Self { alias, keys })
    }

    pub fn alias(&self) -> &Alias {
        &self.alias
    }

    pub fn keys(&self) -> &[SymmetricKey] {
        &self.keys
    }

    pub fn m(&self) -> usize {
        self.keys.len()
    }
}

/// The client's secret choice of one key from a key set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    alias: Alias,
    index: usize,
    m: usize,
}

impl Selection {
    pub fn new(alias: Alias, index: usize, m: usize) -> Result<Self, KeyError> {
        if index >= m {
            return Err(KeyError::IndexOutOfRange { index, m });
        }
        Ok(Self { alias, index, m })
    }

    pub fn alias(&self) -> &Alias {
        &self.alias
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// `m` authenticated ciphertexts, slot `i` encrypted under key `i`.
/// Each slot is `nonce (12) || ciphertext`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlindedResponse {
    pub alias: Alias,
    pub slots: Vec<Vec<u8>>,
}

/// The provider's result encrypted to every candidate public key, in slot
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedBundle {
    pub alias: Alias,
    pub payloads: Vec<Vec<u8>>,
}

pub fn generate_key_set<R: RngCore + CryptoRng>(
    m: usize,
    alias: Alias,
    rng: &mut R,
) -> Result<KeySet, KeyError> {
    if m < 2 {
        return Err(KeyError::KeySetTooSmall(m));
    }
    let mut keys: Vec<SymmetricKey> = Vec::with_capacity(m);
    while keys.len() < m {
        let k = SymmetricKey::generate(rng);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    KeySet::new(alias, keys)
}

/// Uniform secret index into `keyset`.
pub fn select_index<R: RngCore + CryptoRng>(keyset: &KeySet, rng: &mut R) -> Selection {
    let index = rng.gen_range(0..keyset.m());
    Selection::new(keyset.alias.clone(), index, keyset.m()).expect("index drawn in range")
}

fn slot_aad(alias: &Alias, slot: usize) -> Vec<u8> {
    let mut aad = Vec::with_capacity(SLOT_AAD.len() + alias.0.len() + 4);
    aad.extend_from_slice(SLOT_AAD);
    aad.extend_from_slice(alias.0.as_bytes());
    aad.extend_from_slice(&(slot as u32).to_be_bytes());
    aad
}

/// Build the client's reply to one key set.
pub fn blind<R: RngCore + CryptoRng>(
    keyset: &KeySet,
    sel: &Selection,
    client_pub: &PublicKey,
    rng: &mut R,
) -> Result<BlindedResponse, KeyError> {
    if sel.alias != keyset.alias {
        return Err(KeyError::AliasMismatch {
            expected: keyset.alias.0.clone(),
            found: sel.alias.0.clone(),
        });
    }
    if sel.m != keyset.m() {
        return Err(KeyError::SlotCountMismatch {
            expected: keyset.m(),
            found: sel.m,
        });
    }
    let mut slots = Vec::with_capacity(keyset.m());
    for (i, key) in keyset.keys.iter().enumerate() {
        // Decoys are public halves of real keypairs, so every slot opens to
        // a key drawn from the same distribution.
        let pk = if i == sel.index {
            *client_pub
        } else {
            *ClientKeypair::generate(rng).public()
        };
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        let aad = slot_aad(&keyset.alias, i);
        let ct = key
            .cipher()
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: pk.as_bytes(),
                    aad: &aad,
                },
            )
            .expect("in-memory encryption");
        let mut slot = nonce.to_vec();
        slot.extend_from_slice(&ct);
        slots.push(slot);
    }
    Ok(BlindedResponse {
        alias: keyset.alias.clone(),
        slots,
    })
}

/// Provider side: open every slot under its positional key. All slots are
/// authenticated before any candidate is returned.
pub fn unwrap(keyset: &KeySet, blinded: &BlindedResponse) -> Result<Vec<PublicKey>, KeyError> {
    if blinded.alias != keyset.alias {
        return Err(KeyError::AliasMismatch {
            expected: keyset.alias.0.clone(),
            found: blinded.alias.0.clone(),
        });
    }
    if blinded.slots.len() != keyset.m() {
        return Err(KeyError::SlotCountMismatch {
            expected: keyset.m(),
            found: blinded.slots.len(),
        });
    }
    let mut candidates = Vec::with_capacity(keyset.m());
    for (i, (key, slot)) in keyset.keys.iter().zip(&blinded.slots).enumerate() {
        if slot.len() < NONCE_LEN {
            return Err(KeyError::TamperedResponse { slot: i });
        }
        let (nonce, ct) = slot.split_at(NONCE_LEN);
        let aad = slot_aad(&keyset.alias, i);
        let plain = key
            .cipher()
            .decrypt(Nonce::from_slice(nonce), Payload { msg: ct, aad: &aad })
            .map_err(|_| KeyError::TamperedResponse { slot: i })?;
        let pk = PublicKey::from_bytes(&plain).ok_or(KeyError::MalformedCandidate { slot: i })?;
        candidates.push(pk);
    }
    Ok(candidates)
}

/// Encrypt `payload` to every candidate, preserving slot order.
pub fn multi_encrypt<R: RngCore + CryptoRng>(
    alias: Alias,
    payload: &[u8],
    candidates: &[PublicKey],
    rng: &mut R,
) -> Result<EncryptedBundle, KeyError> {
    if candidates.len() < 2 {
        return Err(KeyError::TooFewCandidates(candidates.len()));
    }
    let payloads = candidates
        .iter()
        .enumerate()
        .map(|(i, pk)| hybrid::seal(pk, payload, rng).ok_or(KeyError::MalformedCandidate { slot: i }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EncryptedBundle { alias, payloads })
}

/// Number of bundle payloads `keypair` can decrypt.
pub fn count_decryptable(bundle: &EncryptedBundle, keypair: &ClientKeypair) -> usize {
    bundle
        .payloads
        .iter()
        .filter(|p| keypair.open(p).is_some())
        .count()
}

/// Client side: return the single payload addressed to `keypair`.
/// Every slot is tried.
pub fn open_bundle(bundle: &EncryptedBundle, keypair: &ClientKeypair) -> Result<Vec<u8>, KeyError> {
    let mut opened: Vec<Vec<u8>> = bundle
        .payloads
        .iter()
        .filter_map(|p| keypair.open(p))
        .collect();
    match opened.len() {
        0 => Err(KeyError::NoDecryptableEntry),
        1 => Ok(opened.pop().expect("one entry")),
        n => Err(KeyError::MultipleDecryptable(n)),
    }
}

/// Wire forms. Byte fields are base64; `m` is carried explicitly and must
/// agree with the list length.
pub mod wire {
    use super::*;

    #[derive(Debug, thiserror::Error)]
    pub enum WireError {
        #[error("json: {0}")]
        Json(#[from] serde_json::Error),
        #[error(transparent)]
        Key(#[from] KeyError),
        #[error("declared m={declared} but {found} entries present")]
        CountMismatch { declared: usize, found: usize },
        #[error("key {0} is not {KEY_LEN} bytes")]
        BadKeyLength(usize),
    }

    #[derive(Serialize, Deserialize)]
    struct KeySetWire {
        alias: Alias,
        m: usize,
        #[serde(with = "crate::b64::list")]
        keys: Vec<Vec<u8>>,
    }

    #[derive(Serialize, Deserialize)]
    struct BlindedWire {
        alias: Alias,
        m: usize,
        #[serde(with = "crate::b64::list")]
        slots: Vec<Vec<u8>>,
    }

    #[derive(Serialize, Deserialize)]
    struct BundleWire {
        alias: Alias,
        m: usize,
        #[serde(with = "crate::b64::list")]
        payloads: Vec<Vec<u8>>,
    }

    fn check(declared: usize, found: usize) -> Result<(), WireError> {
        if declared != found {
            return Err(WireError::CountMismatch { declared, found });
        }
        Ok(())
    }

    pub fn encode_key_set(ks: &KeySet) -> Vec<u8> {
        serde_json::to_vec(&KeySetWire {
            alias: ks.alias.clone(),
            m: ks.m(),
            keys: ks.keys.iter().map(|k| k.0.to_vec()).collect(),
        })
        .expect("serializable")
    }

    pub fn decode_key_set(bytes: &[u8]) -> Result<KeySet, WireError> {
        let w: KeySetWire = serde_json::from_slice(bytes)?;
        check(w.m, w.keys.len())?;
        let keys = w
            .keys
            .iter()
            .enumerate()
            .map(|(i, k)| {
                <[u8; KEY_LEN]>::try_from(k.as_slice())
                    .map(SymmetricKey)
                    .map_err(|_| WireError::BadKeyLength(i))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(KeySet::new(w.alias, keys)?)
    }

    pub fn encode_blinded(b: &BlindedResponse) -> Vec<u8> {
        serde_json::to_vec(&BlindedWire {
            alias: b.alias.clone(),
            m: b.slots.len(),
            slots: b.slots.clone(),
        })
        .expect("serializable")
    }

    pub fn decode_blinded(bytes: &[u8]) -> Result<BlindedResponse, WireError> {
        let w: BlindedWire = serde_json::from_slice(bytes)?;
        check(w.m, w.slots.len())?;
        Ok(BlindedResponse {
            alias: w.alias,
            slots: w.slots,
        })
    }

    pub fn encode_bundle(b: &EncryptedBundle) -> Vec<u8> {
        serde_json::to_vec(&BundleWire {
            alias: b.alias.clone(),
            m: b.payloads.len(),
            payloads: b.payloads.clone(),
        })
        .expect("serializable")
    }

    pub fn decode_bundle(bytes: &[u8]) -> Result<EncryptedBundle, WireError> {
        let w: BundleWire = serde_json::from_slice(bytes)?;
        check(w.m, w.payloads.len())?;
        Ok(EncryptedBundle {
            alias: w.alias,
            payloads: w.payloads,
        })
    }
}
