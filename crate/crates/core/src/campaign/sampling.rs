use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::CampaignError;
use crate::ids::QaId;
use crate::qa_bank::{Bank, Quota, Stratum};

/// Independent generator stream for `(seed, tag, key)`.
///
/// Streams are derived by hashing rather than by advancing one shared
/// generator, so adding a stratum or a question never shifts the draws of
/// another one.
pub fn seeded_rng(seed: u64, tag: &str, key: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update([0u8]);
    h.update(key.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Uniform sampling without replacement inside each stratum. Quotas for the
/// same stratum add up. Output is grouped by stratum and sorted by id inside
/// each group.
pub fn sample_questions(bank: &Bank, plan: &[Quota], seed: u64) -> Result<Vec<QaId>, CampaignError> {
    let mut need: BTreeMap<Stratum, usize> = BTreeMap::new();
    for q in plan {
        *need.entry(q.stratum()).or_default() += q.count as usize;
    }
    let mut out = Vec::new();
    for (stratum, count) in need {
        let candidates = bank.sampleable(&stratum);
        if candidates.len() < count {
            return Err(CampaignError::InsufficientStock { stratum, have: candidates.len(), need: count });
        }
        let mut rng = seeded_rng(seed, "sample", &stratum.to_string());
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, candidates.len(), count).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| candidates[i].id.clone()));
    }
    Ok(out)
}
