use clap::ValueEnum;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Figures with a bundled configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

impl Figure {
    pub const ALL: [Figure; 8] = [
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
        Figure::Fig8,
        Figure::Fig9,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
        }
    }

    pub fn config_json(self) -> &'static str {
        match self {
            Figure::Fig2 => include_str!("../configs/fig2.json"),
            Figure::Fig3 => include_str!("../configs/fig3.json"),
            Figure::Fig4 => include_str!("../configs/fig4.json"),
            Figure::Fig5 => include_str!("../configs/fig5.json"),
            Figure::Fig6 => include_str!("../configs/fig6.json"),
            Figure::Fig7 => include_str!("../configs/fig7.json"),
            Figure::Fig8 => include_str!("../configs/fig8.json"),
            Figure::Fig9 => include_str!("../configs/fig9.json"),
        }
    }

    pub fn config(self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(self.config_json().as_bytes())
            .map_err(|e| Error::Config(format!("bundled {} config: {e}", self.name())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_validate() {
        for f in Figure::ALL {
            let c = f.config().unwrap();
            assert_eq!(c.name, f.name());
        }
    }
}
