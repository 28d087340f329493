//! One-call denoising: NLM with a chosen center weight, optionally followed
//! by blockwise SURE shrinkage.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::bss::{bss_shrink_with, BssConfig, RoundStats};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::nlm::{nlm_denoise, CenterWeight, NlmOutput, NlmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Zero,
    Std,
    Max,
    Bss,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Zero, Method::Std, Method::Max, Method::Bss];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Zero => "zero",
            Method::Std => "std",
            Method::Max => "max",
            Method::Bss => "bss",
        }
    }

    /// Center weight of the underlying NLM pass.
    pub fn center_weight(self) -> CenterWeight {
        match self {
            Method::Zero => CenterWeight::Zero,
            Method::Max => CenterWeight::Max,
            Method::Std | Method::Bss => CenterWeight::Std,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct Denoised {
    pub image: GrayImage,
    pub nlm: NlmOutput,
    /// Empty unless the method is [`Method::Bss`].
    pub rounds: Vec<RoundStats>,
    pub round_times: Vec<Duration>,
}

impl Denoised {
    /// Wraps a plain NLM result.
    pub fn unshrunk(nlm: NlmOutput) -> Self {
        Self {
            image: nlm.x_hat.clone(),
            nlm,
            rounds: Vec::new(),
            round_times: Vec::new(),
        }
    }

    pub fn mean_round_time(&self) -> Duration {
        if self.round_times.is_empty() {
            Duration::ZERO
        } else {
            self.round_times.iter().sum::<Duration>() / self.round_times.len() as u32
        }
    }
}

/// Denoises `y` with the given method. `params.center_weight` is overridden
/// by the method.
pub fn denoise(
    y: &GrayImage,
    params: &NlmParams,
    sigma: f64,
    method: Method,
    config: &BssConfig,
) -> Result<Denoised> {
    let params = params.with_center_weight(method.center_weight());
    let nlm = nlm_denoise(y, &params, sigma)?;
    if method == Method::Bss {
        shrink(y, nlm, config)
    } else {
        Ok(Denoised::unshrunk(nlm))
    }
}

/// Applies blockwise shrinkage to an existing std-mode NLM result.
pub fn shrink(y: &GrayImage, nlm: NlmOutput, config: &BssConfig) -> Result<Denoised> {
    let mut round_times = Vec::new();
    let mut last = Instant::now();
    let out = bss_shrink_with(y, &nlm, config, |_, _| {
        let now = Instant::now();
        round_times.push(now - last);
        last = now;
    })?;
    Ok(Denoised {
        image: out.image,
        nlm,
        rounds: out.rounds,
        round_times,
    })
}
