pub mod conic;
pub mod error;
pub mod market;
pub mod normal;
pub mod robust;
pub mod storage;
pub mod uncertainty;
pub mod backtest;
pub mod synthetic;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/storage.md")]
    mod storage {}
    #[doc = include_str!("../../../book/src/uncertainty-sets.md")]
    mod uncertainty_sets {}
    #[doc = include_str!("../../../book/src/robust.md")]
    mod robust {}
    #[doc = include_str!("../../../book/src/chance.md")]
    mod chance {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/backtest.md")]
    mod backtest {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
