use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use phc_core::cone_dynamics::{ConeParam, ConeSolution};
use phc_core::surfaces::*;
use phc_core::Circle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    E13,
    E14,
    E15,
    E16,
    E17,
    /// Tilted plane, not pseudo-holomorphic.
    Tilted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    PhiH,
    TfPos,
    TfNonpos,
}

/// Example family and its parameters.
#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyName,
    /// e13: angle of the half-plane.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub nu: f64,
    /// e14, e15, e16 tf-nonpos: side of the surface.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub sign: i8,
    /// e15: rational period 2πa/b.
    #[arg(long, default_value_t = 4)]
    pub a: u32,
    #[arg(long, default_value_t = 5)]
    pub b: u32,
    /// e15: cone constant, instead of --a/--b (must close up).
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// e15: time of the cone vertex.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub cone_t: f64,
    /// e16: which level set.
    #[arg(long, value_enum, default_value_t = Variant::PhiH)]
    pub variant: Variant,
    /// e16: value of φ (phi-h) or t (tf-*).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub cst: f64,
    /// e16: value of h (phi-h) or f (tf-*).
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub cst2: f64,
    /// e17: number of sheets.
    #[arg(long, default_value_t = 2)]
    pub q: u32,
    /// e17: winding numerator.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub p: i32,
    /// e17: phase.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// tilted: slope of the plane.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub slope: f64,
}

impl FamilyArgs {
    pub fn build(&self, circle_length: Option<f64>) -> anyhow::Result<ParamSurface> {
        if circle_length.is_some() && !matches!(self.family, FamilyName::E13 | FamilyName::E17) {
            bail!("circle_length can only be set for e13 and e17");
        }
        let s = match self.family {
            FamilyName::E13 => make_e13_on(self.nu, circle_length.map_or_else(Circle::default, Circle::new)),
            FamilyName::E14 => make_e14(self.sign),
            FamilyName::E15 => make_e15(self.cone()?, self.sign, self.cone_t)?,
            FamilyName::E16 => {
                let v = match self.variant {
                    Variant::PhiH => E16Variant::PhiH,
                    Variant::TfPos => E16Variant::TfPositive,
                    Variant::TfNonpos => E16Variant::TfNonPositive { sign: self.sign },
                };
                make_e16(v, self.cst, self.cst2)?
            }
            FamilyName::E17 => match circle_length {
                Some(l) => make_e17_on(self.q, self.p, self.alpha, Circle::new(l))?,
                None => make_e17(self.q, self.p, self.alpha)?,
            },
            FamilyName::Tilted => make_tilted_plane(self.slope),
        };
        Ok(s)
    }

    pub fn cone(&self) -> anyhow::Result<ConeSolution> {
        match self.c {
            Some(c) => Ok(ConeSolution::new(ConeParam::new(c)?)?),
            None => ConeSolution::rational(self.a, self.b).with_context(|| format!("no cone with period 2π·{}/{}", self.a, self.b)),
        }
    }

    pub fn is_cone(&self) -> bool {
        self.family == FamilyName::E15
    }
}
