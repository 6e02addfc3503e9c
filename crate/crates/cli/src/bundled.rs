//! Configurations shipped with the binary.

use crate::config::{ConfigError, ExperimentConfig};

pub struct Bundled {
    pub name: &'static str,
    pub text: &'static str,
}

pub const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "fig1_left",
        text: include_str!("../configs/fig1_left.conf"),
    },
    Bundled {
        name: "fig1_right",
        text: include_str!("../configs/fig1_right.conf"),
    },
    Bundled {
        name: "fig2_left",
        text: include_str!("../configs/fig2_left.conf"),
    },
    Bundled {
        name: "fig2_right",
        text: include_str!("../configs/fig2_right.conf"),
    },
    Bundled {
        name: "fig3",
        text: include_str!("../configs/fig3.conf"),
    },
    Bundled {
        name: "fig4",
        text: include_str!("../configs/fig4.conf"),
    },
    Bundled {
        name: "fig5",
        text: include_str!("../configs/fig5.conf"),
    },
    Bundled {
        name: "kato",
        text: include_str!("../configs/kato.conf"),
    },
];

pub fn find(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

impl Bundled {
    pub fn parse(&self) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_text(self.text)
    }

    /// The `description` line, read without validating the rest.
    pub fn description(&self) -> &'static str {
        self.text
            .lines()
            .find_map(|l| l.trim().strip_prefix("description"))
            .and_then(|rest| rest.trim_start().strip_prefix('='))
            .map(str::trim)
            .unwrap_or("")
    }
}
