//! S4: candidates are everyone who liked or commented a picture the
//! victim cannot hide (covers) or chose to show.

use super::session::{Recovery, Step};
use super::trace::EventKind;
use super::Termination;
use crate::service::Endpoint;

pub(super) fn run(run: &mut Recovery<'_>) -> Step<Termination> {
    let victim = run.victim;
    let (stamp, pictures) = run.expect(Endpoint::Pictures, |o, a| o.public_pictures(a, victim))?;
    run.record(
        stamp,
        EventKind::Pictures {
            user: victim,
            pictures: pictures.clone(),
        },
    );

    let mut batches = Vec::with_capacity(pictures.len());
    for picture in pictures {
        let (stamp, reactions) =
            run.expect(Endpoint::Reactions, |o, a| o.picture_reactions(a, picture))?;
        run.record(
            stamp,
            EventKind::Reactions {
                picture,
                likers: reactions.likers.clone(),
                commenters: reactions.commenters.clone(),
            },
        );
        let mut batch = reactions.likers;
        batch.extend(reactions.commenters);
        batches.push(batch);
    }

    for batch in &batches {
        run.verify_batch(batch)?;
    }
    run.drain_expansion()?;
    Ok(Termination::Exhausted)
}
