//! Seeded sampling of random wreath elements.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::finite_group::Group;
use crate::wreath::{GammaTuple, Permutation, WreathElement};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform permutation of {1..support} with uniform Γ entries on the same range.
pub fn random_element<R: Rng>(rng: &mut R, group: &Arc<Group>, support: usize) -> WreathElement {
    let perm = random_perm(rng, support, 0);
    let tuple = random_tuple(rng, group, 1..=support);
    WreathElement::new(group.clone(), perm, tuple)
}

/// Uniform permutation of {offset+1 .. offset+len}.
pub fn random_perm<R: Rng>(rng: &mut R, len: usize, offset: usize) -> Permutation {
    let mut img: Vec<usize> = (offset + 1..=offset + len).collect();
    img.shuffle(rng);
    Permutation::from_images((offset + 1..=offset + len).zip(img)).expect("shuffle is a bijection")
}

pub fn random_tuple<R: Rng>(rng: &mut R, group: &Arc<Group>, positions: impl IntoIterator<Item = usize>) -> GammaTuple {
    let entries: Vec<(usize, usize)> = positions.into_iter().map(|i| (i, rng.gen_range(0..group.order()))).collect();
    GammaTuple::from_entries(entries, group.e()).expect("positive positions")
}
