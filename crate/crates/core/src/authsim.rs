//! Secret-key challenge-response authentication over `Quleq(P)`.
//!
//! Prover and verifier share a vector `h` of quasiorders that contains a
//! generating set. The verifier sends random terms `p_1, .., p_b`; the
//! prover answers `g(p(h))`; the verifier recomputes and compares bit for
//! bit. Responses also serve as one-time-pad keystreams.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::thread;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genset::GenPlan;
use crate::lattice::QuleqLattice;
use crate::latterm::{random_term_with, EvalContext, LatTerm};
use crate::rel::QuasiRel;

pub const DEFAULT_B: usize = 8;
pub const DEFAULT_DEPTH: usize = 5;

/// Post-processing applied to `p(h)` before it is sent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GSpec {
    #[default]
    Identity,
    /// A keyed permutation of the bytes of the concatenated encodings.
    BytePermutation { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedKey {
    pub mu: QuasiRel,
    pub h: Vec<QuasiRel>,
    /// `h[..generating]` is the verified generating set.
    pub generating: usize,
    pub g: GSpec,
    pub b: usize,
    pub depth: usize,
    /// Random constants allowed in challenge terms.
    pub n_constants: usize,
}

impl SharedKey {
    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("key serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let key: SharedKey = serde_json::from_str(s)?;
        if key.h.iter().any(|r| r.n() != key.mu.n() || !key.mu.is_subset(r)) {
            return Err(Error::Precondition("every key component must contain the order".into()));
        }
        Ok(key)
    }
}

fn random_quleq<R: Rng>(rng: &mut R, mu: &QuasiRel) -> QuasiRel {
    let n = mu.n();
    let mut r = mu.clone();
    if n >= 2 {
        for _ in 0..rng.gen_range(1..=n) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b {
                r.add_pair_closed(a, b);
            }
        }
    }
    r
}

/// `h = E` followed by `pad` random members of `Quleq(P)`.
pub fn keygen(mu: &QuasiRel, plan: &GenPlan, pad: usize, seed: u64) -> SharedKey {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = plan.e.clone();
    for _ in 0..pad {
        h.push(random_quleq(&mut rng, mu));
    }
    SharedKey {
        mu: mu.clone(),
        h,
        generating: plan.e.len(),
        g: GSpec::Identity,
        b: DEFAULT_B,
        depth: DEFAULT_DEPTH,
        n_constants: 0,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub nonce: u64,
    pub terms: Vec<LatTerm>,
    pub constants: BTreeMap<String, QuasiRel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    #[serde(with = "b64_parts")]
    pub parts: Vec<Vec<u8>>,
}

mod b64_parts {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<u8>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(|p| B64.encode(p)).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<u8>>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter().map(|s| B64.decode(s).map_err(serde::de::Error::custom)).collect()
    }
}

/// `b` random nontrivial terms in `x1..xk` and, if the key allows, a few
/// random constants `#c0, #c1, ..`.
pub fn challenge(key: &SharedKey, seed: u64) -> Challenge {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..key.n_constants).map(|i| format!("c{i}")).collect();
    let constants = names.iter().map(|c| (c.clone(), random_quleq(&mut rng, &key.mu))).collect();
    let terms = (0..key.b).map(|_| random_term_with(&mut rng, key.k(), key.depth, &names)).collect();
    Challenge { nonce: rng.gen(), terms, constants }
}

fn apply_g(g: &GSpec, parts: Vec<Vec<u8>>) -> Vec<Vec<u8>> {
    match g {
        GSpec::Identity => parts,
        GSpec::BytePermutation { seed } => {
            let flat: Vec<u8> = parts.concat();
            let mut perm: Vec<usize> = (0..flat.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mixed: Vec<u8> = perm.iter().map(|&i| flat[i]).collect();
            let mut out = Vec::with_capacity(parts.len());
            let mut at = 0;
            for p in &parts {
                out.push(mixed[at..at + p.len()].to_vec());
                at += p.len();
            }
            out
        }
    }
}

/// `g(p(h))`.
pub fn respond(key: &SharedKey, ch: &Challenge) -> Result<Response> {
    let lat = QuleqLattice::new(key.mu.clone());
    let mut ctx = EvalContext::new(&lat, &key.h);
    for (name, v) in &ch.constants {
        ctx = ctx.with_constant(name, v.clone());
    }
    let parts = ch.terms.iter().map(|t| Ok(t.eval(&ctx)?.encode_bits())).collect::<Result<Vec<_>>>()?;
    Ok(Response { parts: apply_g(&key.g, parts) })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject(String),
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        *self == Verdict::Accept
    }
}

pub fn verify(key: &SharedKey, ch: &Challenge, resp: &Response) -> Verdict {
    if resp.parts.len() != ch.terms.len() {
        return Verdict::Reject(format!("expected {} components, got {}", ch.terms.len(), resp.parts.len()));
    }
    let expected = match respond(key, ch) {
        Ok(r) => r,
        Err(e) => return Verdict::Reject(format!("challenge cannot be evaluated: {e}")),
    };
    for (i, (got, want)) in resp.parts.iter().zip(&expected.parts).enumerate() {
        if got.len() != want.len() {
            return Verdict::Reject(format!("component {i} has {} bytes, expected {}", got.len(), want.len()));
        }
        if got != want {
            return Verdict::Reject(format!("component {i} differs"));
        }
    }
    Verdict::Accept
}

/// Concatenated encodings: `b · ⌈n²/8⌉` bytes.
pub fn vernam_key(resp: &Response) -> Vec<u8> {
    resp.parts.concat()
}

/// XOR with the keystream; refuses messages longer than the keystream.
pub fn vernam_xor(keystream: &[u8], message: &[u8]) -> Result<Vec<u8>> {
    if message.len() > keystream.len() {
        return Err(Error::Precondition(format!(
            "message of {} bytes exceeds the {}-byte keystream",
            message.len(),
            keystream.len()
        )));
    }
    Ok(message.iter().zip(keystream).map(|(m, k)| m ^ k).collect())
}

// ---------------------------------------------------------------------------
// loopback transport

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MsgType {
    Hello,
    Challenge,
    Response,
    Verdict,
}

/// One line of the wire format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    #[serde(rename = "type")]
    pub kind: MsgType,
    pub session: u64,
    pub payload: serde_json::Value,
}

impl Message {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("message serializes")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    pub fn dump(&self) -> String {
        self.messages.iter().map(|m| m.to_line() + "\n").collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let messages = text.lines().filter(|l| !l.trim().is_empty()).map(Message::from_line).collect::<Result<_>>()?;
        Ok(Transcript { messages })
    }

    pub fn find(&self, kind: MsgType) -> Option<&Message> {
        self.messages.iter().find(|m| m.kind == kind)
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.find(MsgType::Verdict).and_then(|m| serde_json::from_value(m.payload.clone()).ok())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum VState {
    AwaitHello,
    AwaitResponse(Box<Challenge>),
    Done,
}

/// Verifier side of one session.
pub struct Verifier {
    key: SharedKey,
    session: u64,
    seed: u64,
    state: VState,
}

impl Verifier {
    pub fn new(key: SharedKey, session: u64, seed: u64) -> Self {
        Verifier { key, session, seed, state: VState::AwaitHello }
    }

    pub fn is_done(&self) -> bool {
        self.state == VState::Done
    }

    /// Handles one incoming message and returns the reply, if any.
    pub fn handle(&mut self, msg: &Message) -> Result<Option<Message>> {
        let reply = |kind, payload| Message { kind, session: self.session, payload };
        match (&self.state, msg.kind) {
            (VState::AwaitHello, MsgType::Hello) => {
                let ch = challenge(&self.key, self.seed);
                let out = reply(MsgType::Challenge, serde_json::to_value(&ch)?);
                self.state = VState::AwaitResponse(Box::new(ch));
                Ok(Some(out))
            }
            (VState::AwaitResponse(ch), MsgType::Response) => {
                let verdict = match serde_json::from_value::<Response>(msg.payload.clone()) {
                    Ok(resp) => verify(&self.key, ch, &resp),
                    Err(e) => Verdict::Reject(format!("malformed response: {e}")),
                };
                self.state = VState::Done;
                Ok(Some(reply(MsgType::Verdict, serde_json::to_value(&verdict)?)))
            }
            (s, k) => Err(Error::Precondition(format!("verifier in state {s:?} cannot take {k:?}"))),
        }
    }
}

/// Prover side of one session.
pub struct Prover {
    key: SharedKey,
    session: u64,
    verdict: Option<Verdict>,
}

impl Prover {
    pub fn new(key: SharedKey, session: u64) -> Self {
        Prover { key, session, verdict: None }
    }

    pub fn hello(&self) -> Message {
        Message { kind: MsgType::Hello, session: self.session, payload: serde_json::Value::Null }
    }

    pub fn verdict(&self) -> Option<&Verdict> {
        self.verdict.as_ref()
    }

    pub fn handle(&mut self, msg: &Message) -> Result<Option<Message>> {
        match msg.kind {
            MsgType::Challenge => {
                let ch: Challenge = serde_json::from_value(msg.payload.clone())?;
                let resp = respond(&self.key, &ch)?;
                Ok(Some(Message { kind: MsgType::Response, session: self.session, payload: serde_json::to_value(&resp)? }))
            }
            MsgType::Verdict => {
                self.verdict = Some(serde_json::from_value(msg.payload.clone())?);
                Ok(None)
            }
            k => Err(Error::Precondition(format!("prover cannot take {k:?}"))),
        }
    }
}

/// Runs one session in-process and records every message.
pub fn run_session(prover_key: &SharedKey, verifier_key: &SharedKey, session: u64, seed: u64) -> Result<Transcript> {
    let mut p = Prover::new(prover_key.clone(), session);
    let mut v = Verifier::new(verifier_key.clone(), session, seed);
    let mut t = Transcript::default();
    let mut next = Some(p.hello());
    let mut to_verifier = true;
    while let Some(msg) = next {
        t.messages.push(msg.clone());
        next = if to_verifier { v.handle(&msg)? } else { p.handle(&msg)? };
        to_verifier = !to_verifier;
    }
    Ok(t)
}

/// Feeds a recorded response to a verifier that issues a fresh challenge.
pub fn replay_response(key: &SharedKey, recorded: &Transcript, session: u64, seed: u64) -> Result<Verdict> {
    let resp = recorded.find(MsgType::Response).ok_or_else(|| Error::Precondition("transcript has no response".into()))?;
    let mut v = Verifier::new(key.clone(), session, seed);
    v.handle(&Message { kind: MsgType::Hello, session, payload: serde_json::Value::Null })?;
    let out = v.handle(&Message { kind: MsgType::Response, session, payload: resp.payload.clone() })?.unwrap();
    Ok(serde_json::from_value(out.payload)?)
}

/// Runs `sessions` sessions with prover and verifier on separate threads
/// that exchange wire lines over channels. Session `s` uses challenge seed
/// `seed + s`.
pub fn serve_loopback(key: &SharedKey, sessions: u64, seed: u64) -> Result<Vec<Transcript>> {
    let (to_v, v_in) = mpsc::channel::<String>();
    let (to_p, p_in) = mpsc::channel::<String>();
    let vkey = key.clone();
    let verifier = thread::spawn(move || -> Result<()> {
        let mut live: BTreeMap<u64, Verifier> = BTreeMap::new();
        for line in v_in {
            let msg = Message::from_line(&line)?;
            let v = live
                .entry(msg.session)
                .or_insert_with(|| Verifier::new(vkey.clone(), msg.session, seed.wrapping_add(msg.session)));
            if let Some(out) = v.handle(&msg)? {
                if to_p.send(out.to_line()).is_err() {
                    break;
                }
            }
            if v.is_done() {
                live.remove(&msg.session);
            }
        }
        Ok(())
    });
    let mut transcripts = Vec::new();
    for s in 0..sessions {
        let mut p = Prover::new(key.clone(), s);
        let mut t = Transcript::default();
        let hello = p.hello();
        t.messages.push(hello.clone());
        to_v.send(hello.to_line()).map_err(|_| Error::Precondition("verifier hung up".into()))?;
        while p.verdict().is_none() {
            let line = p_in.recv().map_err(|_| Error::Precondition("verifier hung up".into()))?;
            let msg = Message::from_line(&line)?;
            t.messages.push(msg.clone());
            if let Some(out) = p.handle(&msg)? {
                t.messages.push(out.clone());
                to_v.send(out.to_line()).map_err(|_| Error::Precondition("verifier hung up".into()))?;
            }
        }
        transcripts.push(t);
    }
    drop(to_v);
    verifier.join().expect("verifier thread")?;
    Ok(transcripts)
}
