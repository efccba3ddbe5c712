//! S1, S2 and S3: candidates are the FacePile samples of the victim's
//! liked pages. The three differ only in the order the per-page batches
//! are checked.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::session::{Recovery, Step};
use super::trace::EventKind;
use super::Termination;
use crate::graph::{PageId, UserId};
use crate::seed::{mix, rng_for};
use crate::service::{Endpoint, Listing};

#[derive(Debug, Clone, Copy)]
pub(super) enum PageOrder {
    Random,
    Ascending,
    Descending,
}

struct PageBatch {
    page: PageId,
    total: usize,
    fans: BTreeSet<UserId>,
}

pub(super) fn run(run: &mut Recovery<'_>, order: PageOrder) -> Step<Termination> {
    let victim = run.victim;
    let (stamp, listing) = run.expect(Endpoint::Likes, |o, a| o.liked_pages(a, victim))?;
    let pages = listing.clone().visible();
    run.record(
        stamp,
        EventKind::Likes {
            user: victim,
            pages: pages.clone(),
        },
    );
    let Listing::Visible(pages) = listing else {
        return Ok(Termination::NothingAccessible);
    };

    let mut fetch: Vec<PageId> = pages.into_iter().collect();
    if let PageOrder::Random = order {
        fetch.shuffle(&mut rng_for(&run.seed_parts()));
    }

    // All samples are fetched before any candidate is checked.
    let mut batches = Vec::with_capacity(fetch.len());
    for page in fetch {
        let mut batch = PageBatch {
            page,
            total: 0,
            fans: BTreeSet::new(),
        };
        for call in 0..run.cfg.facepile_calls_per_page.max(1) {
            let [a, b, c] = run.seed_parts();
            let call_seed = mix(&[a, b, c, page.0 as u64, call as u64]);
            let (stamp, sample) =
                run.expect(Endpoint::Facepile, |o, acct| o.facepile(acct, page, call_seed))?;
            run.record(
                stamp,
                EventKind::Facepile {
                    page,
                    fans: sample.sampled_fans.clone(),
                    total: sample.total_fan_count,
                },
            );
            batch.total = sample.total_fan_count;
            batch.fans.extend(sample.sampled_fans);
        }
        batches.push(batch);
    }

    match order {
        PageOrder::Random => {}
        PageOrder::Ascending => batches.sort_by_key(|b| (b.total, b.page)),
        PageOrder::Descending => {
            batches.sort_by(|x, y| y.total.cmp(&x.total).then(x.page.cmp(&y.page)))
        }
    }

    for batch in &batches {
        run.verify_batch(&batch.fans)?;
    }
    run.drain_expansion()?;
    Ok(Termination::Exhausted)
}
