mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::{coherence_failures, event, file, random_repository};
use copatch_core::conflict::{pushout, ConflictFile};
use copatch_core::line::{diff, File};
use copatch_core::render::render_conflicts;
use copatch_core::repository::{Configuration, RepoError, Repository};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set(names: &[&str]) -> BTreeSet<copatch_core::repository::EventId> {
    names.iter().map(|n| event(n)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn insertion_only_histories_are_coherent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let repo = random_repository(&mut rng, n, false);
        prop_assert_eq!(coherence_failures(&repo), Vec::<String>::new());
    }

    #[test]
    fn record_then_state_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut repo = Repository::new();
        for _ in 0..4 {
            let f = common::random_file(&mut rng, 6, &["a", "b", "c"]);
            match repo.record(&f) {
                Ok(_) | Err(RepoError::NoChange) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
            prop_assert_eq!(repo.repo_state().unwrap().is_linear(), Some(f));
        }
    }

    #[test]
    fn import_laws(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut root = Repository::new();
        root.record(&file("ab")).unwrap();
        let mut branches = Vec::new();
        for _ in 0..3 {
            let mut r = root.clone();
            let f = common::random_file(&mut rng, 4, &["a", "b", "c"]);
            let _ = r.record(&f);
            branches.push(r);
        }
        let (a, b, c) = (&branches[0], &branches[1], &branches[2]);
        prop_assert_eq!(&a.import(a).unwrap(), a);
        let ab = a.import(b).unwrap().repo_state().unwrap();
        let ba = b.import(a).unwrap().repo_state().unwrap();
        prop_assert!(ab.is_isomorphic(&ba).is_some());
        let left = a.import(b).unwrap().import(c).unwrap().repo_state().unwrap();
        let right = a.import(&b.import(c).unwrap()).unwrap().repo_state().unwrap();
        prop_assert!(left.is_isomorphic(&right).is_some());
    }
}

#[test]
fn import_of_branches_is_the_pushout_of_their_states() {
    let mut root = Repository::new();
    root.record(&file("ab")).unwrap();
    let mut left = root.clone();
    left.record(&file("acb")).unwrap();
    let mut right = root.clone();
    right.record(&file("adb")).unwrap();
    let merged = left.import(&right).unwrap().repo_state().unwrap();
    let f = copatch_core::PartialMorphism::embed_patch(&diff(&file("ab"), &file("acb"))).unwrap();
    let g = copatch_core::PartialMorphism::embed_patch(&diff(&file("ab"), &file("adb"))).unwrap();
    let direct = pushout(&f, &g).unwrap();
    assert!(merged.is_isomorphic(direct.apex()).is_some());
    assert_eq!(render_conflicts(&merged), "a\n<<<<<<<\nc\n=======\nd\n>>>>>>>\nb\n");
}

#[test]
fn intro_square_is_a_pushout() {
    // f creates the file, g and h edit it independently; importing g into
    // the repository holding h gives the pushout of g and h
    let mut u1 = Repository::new();
    u1.add_patch_event(event("f"), set(&[]), &diff(&File::empty(), &file("ab"))).unwrap();
    let mut u2 = u1.clone();
    u1.add_patch_event(event("g"), set(&["f"]), &diff(&file("ab"), &file("accb"))).unwrap();
    u2.add_patch_event(event("h"), set(&["f"]), &diff(&file("ab"), &file("abcd"))).unwrap();
    let merged = u2.import(&u1).unwrap();
    let expected = Arc::new(ConflictFile::embed(&file("accbcd")));
    assert!(merged.repo_state().unwrap().is_isomorphic(&expected).is_some());
    let x: Configuration = set(&["f", "g", "h"]);
    assert_eq!(merged.state(&x).unwrap(), merged.repo_state().unwrap());
}

#[test]
fn conflicts_restrict_configurations_but_not_the_repository_state() {
    let mut repo = Repository::new();
    repo.add_patch_event(event("f"), set(&[]), &diff(&File::empty(), &file("ab"))).unwrap();
    repo.add_patch_event(event("g"), set(&["f"]), &diff(&file("ab"), &file("acb"))).unwrap();
    repo.add_patch_event(event("h"), set(&["f"]), &diff(&file("ab"), &file("adb"))).unwrap();
    repo.add_conflict(&event("g"), &event("h")).unwrap();
    assert_eq!(repo.state(&set(&["f", "g", "h"])), Err(RepoError::NotAConfiguration));
    assert_eq!(repo.state(&set(&["g"])), Err(RepoError::NotAConfiguration));
    assert!(repo.repo_state().unwrap().is_linear().is_none());
}

#[test]
fn histories_with_deletions_can_depend_on_the_order() {
    // root y; e1 adds x above, e2 adds z below, e3 deletes y
    let mut repo = Repository::new();
    repo.add_patch_event(event("r"), set(&[]), &diff(&File::empty(), &file("y"))).unwrap();
    repo.add_patch_event(event("e1"), set(&["r"]), &diff(&file("y"), &file("xy"))).unwrap();
    repo.add_patch_event(event("e2"), set(&["r"]), &diff(&file("y"), &file("yz"))).unwrap();
    repo.add_patch_event(event("e3"), set(&["r"]), &diff(&file("y"), &File::empty())).unwrap();
    let first = repo.state_along(&[event("r"), event("e1"), event("e2"), event("e3")]).unwrap();
    let last = repo.state_along(&[event("r"), event("e3"), event("e1"), event("e2")]).unwrap();
    assert_eq!(first.is_linear(), Some(file("xz")));
    assert!(last.is_linear().is_none());
    assert!(!coherence_failures(&repo).is_empty());
}
