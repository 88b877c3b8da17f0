//! Semantic-embedding scorers: PSI (two trained projections), DeViSE
//! (trained image projection into a fixed word space) and ConSE (label
//! predictions combined in word space), plus the triplet SGD trainer.

pub mod checkpoint;
mod conse;
mod devise;
mod matrix;
mod psi;
mod train;
mod vocab;

pub use conse::{conse_embed_image, conse_score};
pub use devise::{devise_embed_query, DeviseModel};
pub use matrix::{dot, Matrix};
pub use psi::PsiModel;
pub use train::{
    accumulate_devise_gradient, accumulate_psi_gradient, devise_triplet_loss, hinge_loss,
    hinge_loss_with_margin, init_devise, init_psi, psi_triplet_loss, sample_triplets, train_devise,
    train_psi, TrainConfig, Trained, Triplet, TripletSampler,
};
pub use vocab::{Vocabulary, DEFAULT_VOCAB_CAP};
