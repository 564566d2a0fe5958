use crate::error::{Error, Result};
use crate::gf2::value_mask;

pub(crate) fn check_width(r: u32) -> Result<()> {
    if !(1..=64).contains(&r) {
        return Err(Error::InvalidParameter(format!("value width r = {r} outside 1..=64")));
    }
    Ok(())
}

/// Keys sorted bytewise with their values; rejects duplicates and values
/// wider than `r` bits. Sorting makes builds independent of input order.
pub(crate) fn normalize<K: AsRef<[u8]>>(pairs: &[(K, u64)], r: u32) -> Result<(Vec<&[u8]>, Vec<u64>)> {
    check_width(r)?;
    let mask = value_mask(r);
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    if let Some((_, v)) = pairs.iter().find(|(_, v)| v & !mask != 0) {
        return Err(Error::ValueTooWide { value: *v, bits: r });
    }
    idx.sort_by(|&a, &b| pairs[a].0.as_ref().cmp(pairs[b].0.as_ref()).then(a.cmp(&b)));
    for w in idx.windows(2) {
        if pairs[w[0]].0.as_ref() == pairs[w[1]].0.as_ref() {
            return Err(Error::DuplicateKeys { index: w[1] });
        }
    }
    Ok((
        idx.iter().map(|&i| pairs[i].0.as_ref()).collect(),
        idx.iter().map(|&i| pairs[i].1).collect(),
    ))
}

/// Sorted, duplicate-free view of a key set.
pub(crate) fn normalize_keys<K: AsRef<[u8]>>(keys: &[K]) -> Result<Vec<&[u8]>> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].as_ref().cmp(keys[b].as_ref()).then(a.cmp(&b)));
    for w in idx.windows(2) {
        if keys[w[0]].as_ref() == keys[w[1]].as_ref() {
            return Err(Error::DuplicateKeys { index: w[1] });
        }
    }
    Ok(idx.iter().map(|&i| keys[i].as_ref()).collect())
}

/// `ceil(factor * n)`, treating results within rounding noise of an
/// integer as that integer (so `1.035 * 10000` gives 10350).
pub(crate) fn scaled_len(factor: f64, n: usize) -> usize {
    let x = factor * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}
