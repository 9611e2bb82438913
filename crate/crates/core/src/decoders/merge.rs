//! Top-down merge sort that drops duplicates while merging.

use std::cmp::Ordering;

use super::{CandidateList, OpCounter};

/// Sorts candidates lexicographically by point and removes exact duplicates,
/// keeping the first occurrence.
pub fn merge_sort_dedup(list: CandidateList) -> CandidateList {
    merge_sort_dedup_counted(list, &mut OpCounter::default())
}

pub fn merge_sort_dedup_counted(list: CandidateList, ops: &mut OpCounter) -> CandidateList {
    let CandidateList { items, target } = list;
    let keep = sort_dedup_indices(
        items.len(),
        |a, b| items[a].point.cmp(&items[b].point),
        &mut ops.comparisons,
    );
    let mut slots: Vec<_> = items.into_iter().map(Some).collect();
    let items = keep.into_iter().filter_map(|i| slots[i].take()).collect();
    CandidateList { items, target }
}

/// Merge sort of the indices `0..len` under `cmp`. Indices comparing equal
/// to an earlier one are dropped. Every call of `cmp` bumps `comparisons`.
pub(crate) fn sort_dedup_indices<F>(len: usize, cmp: F, comparisons: &mut u64) -> Vec<usize>
where
    F: FnMut(usize, usize) -> Ordering,
{
    let mut idx = Vec::new();
    sort_dedup_into(len, cmp, comparisons, &mut idx, &mut Vec::new());
    idx
}

/// [`sort_dedup_indices`] writing into `idx`, with caller-owned scratch.
pub(crate) fn sort_dedup_into<F>(
    len: usize,
    mut cmp: F,
    comparisons: &mut u64,
    idx: &mut Vec<usize>,
    scratch: &mut Vec<usize>,
) where
    F: FnMut(usize, usize) -> Ordering,
{
    idx.clear();
    idx.extend(0..len);
    scratch.clear();
    scratch.resize(len, 0);
    let kept = sort_rec(idx, scratch, &mut cmp, comparisons);
    idx.truncate(kept);
}

/// Sorts `idx` in place, compacting the survivors to the front; returns
/// how many survive.
fn sort_rec<F>(
    idx: &mut [usize],
    scratch: &mut [usize],
    cmp: &mut F,
    comparisons: &mut u64,
) -> usize
where
    F: FnMut(usize, usize) -> Ordering,
{
    let len = idx.len();
    if len <= 1 {
        return len;
    }
    let mid = len / 2;
    let (l, r) = idx.split_at_mut(mid);
    let (sl, sr) = scratch.split_at_mut(mid);
    let kl = sort_rec(l, sl, cmp, comparisons);
    let kr = sort_rec(r, sr, cmp, comparisons);
    let (a, b) = (&l[..kl], &r[..kr]);

    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        *comparisons += 1;
        match cmp(a[i], b[j]) {
            Ordering::Less => {
                scratch[k] = a[i];
                i += 1;
            }
            Ordering::Greater => {
                scratch[k] = b[j];
                j += 1;
            }
            Ordering::Equal => {
                scratch[k] = a[i];
                i += 1;
                j += 1;
            }
        }
        k += 1;
    }
    for &v in a[i..].iter().chain(&b[j..]) {
        scratch[k] = v;
        k += 1;
    }
    idx[..k].copy_from_slice(&scratch[..k]);
    k
}
