//! Public-key encryption of arbitrary-length payloads.
//!
//! X25519 with a fresh ephemeral key per message, HKDF-SHA256 over the
//! shared secret bound to both public keys, then ChaCha20-Poly1305.
//! Ciphertext layout: `ephemeral_pub (32) || aead_ciphertext`.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use x25519_dalek::{PublicKey as XPublic, StaticSecret};

use super::PublicKey;

const INFO: &[u8] = b"medshare/hybrid/v1";
const TAG_LEN: usize = 16;

pub(crate) const OVERHEAD: usize = 32 + TAG_LEN;

fn derive(shared: &[u8; 32], eph: &[u8; 32], recipient: &[u8; 32]) -> (Key, Nonce) {
    let mut salt = [0u8; 64];
    salt[..32].copy_from_slice(eph);
    salt[32..].copy_from_slice(recipient);
    let hk = Hkdf::<Sha256>::new(Some(&salt), shared);
    let mut okm = [0u8; 44];
    hk.expand(INFO, &mut okm).expect("44 bytes is a valid HKDF length");
    (
        *Key::from_slice(&okm[..32]),
        *Nonce::from_slice(&okm[32..]),
    )
}

/// Encrypt `plaintext` to `recipient`. Returns `None` when the recipient key
/// is a low-order point and would yield a non-contributory shared secret.
pub(crate) fn seal<R: RngCore + CryptoRng>(
    recipient: &PublicKey,
    plaintext: &[u8],
    rng: &mut R,
) -> Option<Vec<u8>> {
    let mut eph_bytes = [0u8; 32];
    rng.fill_bytes(&mut eph_bytes);
    let eph = StaticSecret::from(eph_bytes);
    let eph_pub = XPublic::from(&eph);
    let shared = eph.diffie_hellman(&XPublic::from(recipient.0));
    if !shared.was_contributory() {
        return None;
    }
    let (key, nonce) = derive(shared.as_bytes(), eph_pub.as_bytes(), &recipient.0);
    let ct = ChaCha20Poly1305::new(&key)
        .encrypt(&nonce, plaintext)
        .expect("in-memory encryption");
    let mut out = Vec::with_capacity(32 + ct.len());
    out.extend_from_slice(eph_pub.as_bytes());
    out.extend_from_slice(&ct);
    Some(out)
}

/// Decrypt with `secret`. `None` on any failure, including ciphertexts
/// addressed to another key.
pub(crate) fn open(secret: &StaticSecret, public: &PublicKey, ciphertext: &[u8]) -> Option<Vec<u8>> {
    if ciphertext.len() < OVERHEAD {
        return None;
    }
    let eph: [u8; 32] = ciphertext[..32].try_into().ok()?;
    let shared = secret.diffie_hellman(&XPublic::from(eph));
    if !shared.was_contributory() {
        return None;
    }
    let (key, nonce) = derive(shared.as_bytes(), &eph, &public.0);
    ChaCha20Poly1305::new(&key)
        .decrypt(&nonce, &ciphertext[32..])
        .ok()
}
