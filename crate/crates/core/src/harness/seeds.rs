use sha2::{Digest, Sha256};

/// Child seed for `(master, component, index)`. Streams for different
/// components never share state, so adding a component does not shift the
/// seeds of existing ones.
pub fn derive_seed(master: u64, component: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((component.len() as u64).to_le_bytes());
    h.update(component.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
