pub mod check;
pub mod estimate;
pub mod rates;
pub mod risk;
pub mod simulate;
