use crate::error::{Error, Result};
use crate::slate::Slate;

/// Default cap on the number of ordered slates evaluated exhaustively.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

/// `N! / (N - M)!`, saturating at `u128::MAX`.
pub fn ordered_slate_count(corpus_size: usize, slate_size: usize) -> u128 {
    if slate_size > corpus_size {
        return 0;
    }
    (0..slate_size).fold(1u128, |acc, k| acc.saturating_mul((corpus_size - k) as u128))
}

/// Exact maximizer of `objective` over all ordered `slate_size`-subsets.
///
/// Slates are visited in lexicographic order of their item-id sequence and
/// only a strictly larger value replaces the incumbent, so ties resolve to the
/// lexicographically smallest slate.
pub fn slate_argmax_enumerate<F>(
    corpus_size: usize,
    slate_size: usize,
    budget: u64,
    mut objective: F,
) -> Result<Slate>
where
    F: FnMut(&[usize]) -> f64,
{
    if slate_size == 0 || slate_size > corpus_size {
        return Err(Error::invalid(format!(
            "cannot build slates of size {slate_size} from {corpus_size} items"
        )));
    }
    let count = ordered_slate_count(corpus_size, slate_size);
    if count > budget as u128 {
        return Err(Error::BudgetExceeded {
            slates: count,
            budget,
        });
    }

    let mut current = Vec::with_capacity(slate_size);
    let mut used = vec![false; corpus_size];
    let mut best: Option<(f64, Vec<usize>)> = None;
    visit(&mut current, &mut used, slate_size, &mut |slate| {
        let value = objective(slate);
        let better = match &best {
            None => true,
            Some((b, _)) => value > *b,
        };
        if better {
            best = Some((value, slate.to_vec()));
        }
    });
    let (_, items) = best.expect("at least one slate exists");
    Ok(Slate::from_indices_unchecked(&items))
}

fn visit(current: &mut Vec<usize>, used: &mut [bool], m: usize, f: &mut dyn FnMut(&[usize])) {
    if current.len() == m {
        f(current);
        return;
    }
    for item in 0..used.len() {
        if used[item] {
            continue;
        }
        used[item] = true;
        current.push(item);
        visit(current, used, m, f);
        current.pop();
        used[item] = false;
    }
}

/// Approximate maximizer: fills positions in order, each with the item that
/// scores best when the remaining positions hold the lowest-index unused
/// items, then improves by single-position replacements and swaps until no
/// move helps.
pub fn slate_argmax_position_greedy<F>(corpus_size: usize, slate_size: usize, mut objective: F) -> Result<Slate>
where
    F: FnMut(&[usize]) -> f64,
{
    if slate_size == 0 || slate_size > corpus_size {
        return Err(Error::invalid(format!(
            "cannot build slates of size {slate_size} from {corpus_size} items"
        )));
    }
    log::warn!(
        "position-greedy slate search over {corpus_size} items is an approximation of the exact argmax"
    );
    let mut chosen: Vec<usize> = Vec::with_capacity(slate_size);
    let mut used = vec![false; corpus_size];
    let mut trial = vec![0usize; slate_size];
    for pos in 0..slate_size {
        let mut best: Option<(f64, usize)> = None;
        for cand in (0..corpus_size).filter(|&c| !used[c]) {
            trial[..pos].copy_from_slice(&chosen);
            trial[pos] = cand;
            let mut fill = (0..corpus_size).filter(|&c| !used[c] && c != cand);
            for slot in trial.iter_mut().skip(pos + 1) {
                *slot = fill.next().expect("corpus holds enough items");
            }
            let value = objective(&trial);
            if best.is_none_or(|(b, _)| value > b) {
                best = Some((value, cand));
            }
        }
        let (_, item) = best.expect("an unused item remains");
        used[item] = true;
        chosen.push(item);
    }

    let mut value = objective(&chosen);
    for _ in 0..10 * slate_size.max(1) {
        let mut improved = false;
        for pos in 0..slate_size {
            for cand in 0..corpus_size {
                let old = chosen[pos];
                if cand == old {
                    continue;
                }
                let other = chosen.iter().position(|&c| c == cand);
                trial.copy_from_slice(&chosen);
                trial[pos] = cand;
                if let Some(o) = other {
                    trial[o] = old;
                }
                let v = objective(&trial);
                if v > value {
                    value = v;
                    chosen.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(Slate::from_indices_unchecked(&chosen))
}

/// Exact enumeration when within budget, position-greedy otherwise.
pub fn slate_argmax<F>(corpus_size: usize, slate_size: usize, budget: u64, mut objective: F) -> Result<Slate>
where
    F: FnMut(&[usize]) -> f64,
{
    match slate_argmax_enumerate(corpus_size, slate_size, budget, &mut objective) {
        Err(Error::BudgetExceeded { .. }) => {
            slate_argmax_position_greedy(corpus_size, slate_size, objective)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slate::ItemId;

    fn ids(s: &Slate) -> Vec<usize> {
        s.items().iter().map(|i| i.0).collect()
    }

    #[test]
    fn constant_objective_gives_first_items() {
        let s = slate_argmax_enumerate(6, 3, DEFAULT_ENUMERATION_BUDGET, |_| 1.0).unwrap();
        assert_eq!(ids(&s), vec![0, 1, 2]);
    }

    #[test]
    fn sum_of_ids() {
        // 1-based ids {1,2,3}: the id sum is maximized by {2,3} in either order;
        // the tie goes to the lexicographically smaller [2, 3].
        let s = slate_argmax_enumerate(3, 2, DEFAULT_ENUMERATION_BUDGET, |sl| {
            sl.iter().map(|&i| (i + 1) as f64).sum()
        })
        .unwrap();
        assert_eq!(ids(&s), vec![1, 2]);
    }

    #[test]
    fn visits_every_ordered_slate_once() {
        let mut seen = Vec::new();
        slate_argmax_enumerate(5, 3, DEFAULT_ENUMERATION_BUDGET, |s| {
            seen.push(s.to_vec());
            0.0
        })
        .unwrap();
        assert_eq!(seen.len() as u128, ordered_slate_count(5, 3));
        let mut sorted = seen.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, seen);
    }

    #[test]
    fn budget_exceeded() {
        let err = slate_argmax_enumerate(20, 6, 1000, |_| 0.0).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 1000, .. }));
        assert!(err.to_string().contains("position-greedy"));
    }

    #[test]
    fn greedy_fallback_on_separable_objective() {
        let w = [0.3, 0.9, 0.1, 0.5, 0.7];
        let pos = [3.0, 2.0, 1.0];
        let obj = |s: &[usize]| s.iter().zip(pos).map(|(&i, p)| w[i] * p).sum::<f64>();
        let exact = slate_argmax_enumerate(5, 3, DEFAULT_ENUMERATION_BUDGET, obj).unwrap();
        let greedy = slate_argmax_position_greedy(5, 3, obj).unwrap();
        assert_eq!(exact, greedy);
        assert_eq!(exact.items(), &[ItemId(1), ItemId(4), ItemId(3)]);
        let fallback = slate_argmax(5, 3, 10, obj).unwrap();
        assert_eq!(fallback, exact);
    }
}
