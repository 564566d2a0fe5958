use super::seeded::HashSource;
use crate::error::{Error, Result};

/// Calls `f` with `k` distinct indices in `[0, m)` for `key`, in order.
///
/// Function `g_l` has range `[m - l + 1]`; the result is a partial
/// Fisher-Yates shuffle of `0..m` driven by `g_1..g_k`, with the array of
/// the shuffle simulated by a short list of displaced positions.
#[inline]
pub fn for_each_distinct<H: HashSource + ?Sized, F: FnMut(usize)>(
    key: &[u8],
    k: usize,
    m: usize,
    source: &H,
    mut f: F,
) -> Result<()> {
    if k > m {
        return Err(Error::KTooLarge { k, m });
    }
    let mut moved = Displaced::new();
    for ell in 1..=k {
        let g = source.draw(key, ell, (m - ell + 1) as u64) as usize;
        let last = m - ell;
        let at_g = moved.get(g);
        let at_last = moved.get(last);
        moved.set(g, at_last);
        moved.set(last, at_g);
        f(at_g);
    }
    Ok(())
}

/// Writes the indices of [`for_each_distinct`] into `out`.
pub fn distinct_k_set_into<H: HashSource + ?Sized>(
    key: &[u8],
    k: usize,
    m: usize,
    source: &H,
    out: &mut Vec<usize>,
) -> Result<()> {
    out.clear();
    for_each_distinct(key, k, m, source, |j| out.push(j))
}

/// Allocating form of [`distinct_k_set_into`].
pub fn distinct_k_set<H: HashSource + ?Sized>(
    key: &[u8],
    k: usize,
    m: usize,
    source: &H,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(k);
    distinct_k_set_into(key, k, m, source, &mut out)?;
    Ok(out)
}

const INLINE_MOVES: usize = 80;

/// Sparse view of the shuffle array `B` where `B[j] = j` unless recorded.
struct Displaced {
    inline: [(usize, usize); INLINE_MOVES],
    len: usize,
    spill: Vec<(usize, usize)>,
}

impl Displaced {
    #[inline]
    fn new() -> Self {
        Self {
            inline: [(0, 0); INLINE_MOVES],
            len: 0,
            spill: Vec::new(),
        }
    }

    #[inline]
    fn find(&self, pos: usize) -> Option<usize> {
        self.inline[..self.len]
            .iter()
            .chain(&self.spill)
            .find(|e| e.0 == pos)
            .map(|e| e.1)
    }

    #[inline]
    fn get(&self, pos: usize) -> usize {
        self.find(pos).unwrap_or(pos)
    }

    #[inline]
    fn set(&mut self, pos: usize, value: usize) {
        if let Some(e) = self.inline[..self.len]
            .iter_mut()
            .chain(self.spill.iter_mut())
            .find(|e| e.0 == pos)
        {
            e.1 = value;
        } else if self.len < INLINE_MOVES {
            self.inline[self.len] = (pos, value);
            self.len += 1;
        } else {
            self.spill.push((pos, value));
        }
    }
}
