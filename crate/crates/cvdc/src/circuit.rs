//! Optical netlists: a minimal line-oriented grammar, its parser and
//! canonical renderer, a runner that compiles elements onto the Gaussian
//! engine, and the builder for the three-mode dense-coding setup.
//!
//! Grammar (UTF-8 text, `#` starts a comment, blank lines ignored):
//!
//! ```text
//! modes N                 # first non-comment line, N >= 1
//! tms i j r               # two-mode squeezer, r >= 0
//! bs i j t                # beamsplitter, -1 <= t <= 1
//! hwp i j theta_deg       # half-wave-plate pair, acts as bs with t = sin(2*theta)
//! ps i phi_rad            # phase rotation
//! loss i xi               # attenuation, 0 <= xi <= 1 (amplitude)
//! disp i xs ys            # displacement of mode i
//! detect bell i j eta     # joint sum/difference detection (at most one)
//! detect x i eta          # single amplitude-quadrature detector
//! ```
//!
//! Mode ids are 1-based in files and in [`CircuitSpec`]; angles are degrees
//! for `hwp` and radians for `ps`. Unknown tokens are errors, not warnings.

use crate::gaussian::{GaussianError, GaussianState};
use std::fmt::Write as _;
use thiserror::Error;

/// One optical element, in netlist (1-based) mode ids.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Tms { i: usize, j: usize, r: f64 },
    Bs { i: usize, j: usize, t: f64 },
    Hwp { i: usize, j: usize, theta_deg: f64 },
    Ps { i: usize, phi: f64 },
    Loss { i: usize, xi: f64 },
    Disp { i: usize, xs: f64, ys: f64 },
}

/// A detector declaration; detection itself happens in [`crate::detection`].
#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    Bell { i: usize, j: usize, eta: f64 },
    XDet { i: usize, eta: f64 },
}

/// Parsed netlist: mode count, ordered elements, detector declarations.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    pub n_modes: usize,
    pub elements: Vec<Element>,
    pub detectors: Vec<Detector>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: expected `modes N` before any element")]
    MissingModes { line: usize },
    #[error("line {line}: duplicate `modes` declaration")]
    DuplicateModes { line: usize },
    #[error("line {line}: unknown element `{token}`")]
    UnknownElement { line: usize, token: String },
    #[error("line {line}: mode {mode} out of range (1..={n_modes})")]
    ModeOutOfRange {
        line: usize,
        mode: usize,
        n_modes: usize,
    },
    #[error("line {line}: parameter {name} outside its domain")]
    ParamOutOfDomain { line: usize, name: &'static str },
    #[error("line {line}: malformed number `{token}`")]
    MalformedNumber { line: usize, token: String },
    #[error("line {line}: `{element}` takes {expected} arguments, got {got}")]
    WrongArity {
        line: usize,
        element: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: element needs two distinct modes")]
    IdenticalModes { line: usize },
    #[error("line {line}: a second bell detector is not allowed")]
    DuplicateBell { line: usize },
}

struct LineParser<'a> {
    line: usize,
    tokens: &'a [&'a str],
    cursor: usize,
}

impl<'a> LineParser<'a> {
    fn number(&mut self, name: &'static str) -> Result<f64, ParseError> {
        let token = self.tokens[self.cursor];
        self.cursor += 1;
        let value: f64 = token.parse().map_err(|_| ParseError::MalformedNumber {
            line: self.line,
            token: token.to_string(),
        })?;
        if !value.is_finite() {
            return Err(ParseError::ParamOutOfDomain {
                line: self.line,
                name,
            });
        }
        Ok(value)
    }

    fn mode(&mut self, n_modes: usize) -> Result<usize, ParseError> {
        let token = self.tokens[self.cursor];
        self.cursor += 1;
        let id: usize = token.parse().map_err(|_| ParseError::MalformedNumber {
            line: self.line,
            token: token.to_string(),
        })?;
        if id < 1 || id > n_modes {
            return Err(ParseError::ModeOutOfRange {
                line: self.line,
                mode: id,
                n_modes,
            });
        }
        Ok(id)
    }

    fn mode_pair(&mut self, n_modes: usize) -> Result<(usize, usize), ParseError> {
        let i = self.mode(n_modes)?;
        let j = self.mode(n_modes)?;
        if i == j {
            return Err(ParseError::IdenticalModes { line: self.line });
        }
        Ok((i, j))
    }

    fn bounded(&mut self, name: &'static str, lo: f64, hi: f64) -> Result<f64, ParseError> {
        let v = self.number(name)?;
        if v < lo || v > hi {
            return Err(ParseError::ParamOutOfDomain {
                line: self.line,
                name,
            });
        }
        Ok(v)
    }
}

fn expect_arity(
    line: usize,
    element: &'static str,
    args: usize,
    expected: usize,
) -> Result<(), ParseError> {
    if args != expected {
        return Err(ParseError::WrongArity {
            line,
            element,
            expected,
            got: args,
        });
    }
    Ok(())
}

/// Parse a netlist. Parsing is total over the grammar: any defect aborts
/// with an error carrying the 1-based line number, never a partial spec.
pub fn parse_netlist(text: &str) -> Result<CircuitSpec, ParseError> {
    let mut n_modes: Option<usize> = None;
    let mut elements = Vec::new();
    let mut detectors = Vec::new();
    let mut line_count = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        line_count = line;
        let code = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens: Vec<&str> = code.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let keyword = tokens[0].to_ascii_lowercase();
        let args = tokens.len() - 1;

        if keyword == "modes" {
            if n_modes.is_some() {
                return Err(ParseError::DuplicateModes { line });
            }
            expect_arity(line, "modes", args, 1)?;
            let n: usize = tokens[1].parse().map_err(|_| ParseError::MalformedNumber {
                line,
                token: tokens[1].to_string(),
            })?;
            if n == 0 {
                return Err(ParseError::ParamOutOfDomain {
                    line,
                    name: "modes",
                });
            }
            n_modes = Some(n);
            continue;
        }

        let n = n_modes.ok_or(ParseError::MissingModes { line })?;
        let mut p = LineParser {
            line,
            tokens: &tokens[1..],
            cursor: 0,
        };
        match keyword.as_str() {
            "tms" => {
                expect_arity(line, "tms", args, 3)?;
                let (i, j) = p.mode_pair(n)?;
                let r = p.number("r")?;
                if r < 0.0 {
                    return Err(ParseError::ParamOutOfDomain { line, name: "r" });
                }
                elements.push(Element::Tms { i, j, r });
            }
            "bs" => {
                expect_arity(line, "bs", args, 3)?;
                let (i, j) = p.mode_pair(n)?;
                let t = p.bounded("t", -1.0, 1.0)?;
                elements.push(Element::Bs { i, j, t });
            }
            "hwp" => {
                expect_arity(line, "hwp", args, 3)?;
                let (i, j) = p.mode_pair(n)?;
                let theta_deg = p.number("theta")?;
                elements.push(Element::Hwp { i, j, theta_deg });
            }
            "ps" => {
                expect_arity(line, "ps", args, 2)?;
                let i = p.mode(n)?;
                let phi = p.number("phi")?;
                elements.push(Element::Ps { i, phi });
            }
            "loss" => {
                expect_arity(line, "loss", args, 2)?;
                let i = p.mode(n)?;
                let xi = p.bounded("xi", 0.0, 1.0)?;
                elements.push(Element::Loss { i, xi });
            }
            "disp" => {
                expect_arity(line, "disp", args, 3)?;
                let i = p.mode(n)?;
                let xs = p.number("xs")?;
                let ys = p.number("ys")?;
                elements.push(Element::Disp { i, xs, ys });
            }
            "detect" => {
                if args == 0 {
                    return Err(ParseError::WrongArity {
                        line,
                        element: "detect",
                        expected: 3,
                        got: 0,
                    });
                }
                match tokens[1].to_ascii_lowercase().as_str() {
                    "bell" => {
                        expect_arity(line, "detect bell", args - 1, 3)?;
                        p.cursor = 1;
                        let (i, j) = p.mode_pair(n)?;
                        let eta = p.bounded("eta", 0.0, 1.0)?;
                        if detectors.iter().any(|d| matches!(d, Detector::Bell { .. })) {
                            return Err(ParseError::DuplicateBell { line });
                        }
                        detectors.push(Detector::Bell { i, j, eta });
                    }
                    "x" => {
                        expect_arity(line, "detect x", args - 1, 2)?;
                        p.cursor = 1;
                        let i = p.mode(n)?;
                        let eta = p.bounded("eta", 0.0, 1.0)?;
                        detectors.push(Detector::XDet { i, eta });
                    }
                    other => {
                        return Err(ParseError::UnknownElement {
                            line,
                            token: format!("detect {other}"),
                        })
                    }
                }
            }
            _ => {
                return Err(ParseError::UnknownElement {
                    line,
                    token: tokens[0].to_string(),
                })
            }
        }
    }

    match n_modes {
        Some(n_modes) => Ok(CircuitSpec {
            n_modes,
            elements,
            detectors,
        }),
        None => Err(ParseError::MissingModes {
            line: line_count + 1,
        }),
    }
}

/// Canonical netlist text for a spec; `parse_netlist(render_netlist(s)) == s`.
pub fn render_netlist(spec: &CircuitSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "modes {}", spec.n_modes);
    for e in &spec.elements {
        match e {
            Element::Tms { i, j, r } => {
                let _ = writeln!(out, "tms {i} {j} {r}");
            }
            Element::Bs { i, j, t } => {
                let _ = writeln!(out, "bs {i} {j} {t}");
            }
            Element::Hwp { i, j, theta_deg } => {
                let _ = writeln!(out, "hwp {i} {j} {theta_deg}");
            }
            Element::Ps { i, phi } => {
                let _ = writeln!(out, "ps {i} {phi}");
            }
            Element::Loss { i, xi } => {
                let _ = writeln!(out, "loss {i} {xi}");
            }
            Element::Disp { i, xs, ys } => {
                let _ = writeln!(out, "disp {i} {xs} {ys}");
            }
        }
    }
    for d in &spec.detectors {
        match d {
            Detector::Bell { i, j, eta } => {
                let _ = writeln!(out, "detect bell {i} {j} {eta}");
            }
            Detector::XDet { i, eta } => {
                let _ = writeln!(out, "detect x {i} {eta}");
            }
        }
    }
    out
}

fn zero_based(id: usize, n_modes: usize) -> Result<usize, GaussianError> {
    id.checked_sub(1)
        .ok_or(GaussianError::ModeOutOfRange { mode: 0, n_modes })
}

/// Apply the elements in file order to vacuum. Detectors are not applied;
/// they belong to the detection stage.
pub fn run_circuit(spec: &CircuitSpec) -> Result<GaussianState, GaussianError> {
    let n = spec.n_modes;
    let mut state = GaussianState::vacuum(n)?;
    for e in &spec.elements {
        state = match *e {
            Element::Tms { i, j, r } => {
                state.two_mode_squeeze(zero_based(i, n)?, zero_based(j, n)?, r)?
            }
            Element::Bs { i, j, t } => {
                state.beamsplitter(zero_based(i, n)?, zero_based(j, n)?, t)?
            }
            Element::Hwp { i, j, theta_deg } => {
                let t = (2.0 * theta_deg.to_radians()).sin();
                state.beamsplitter(zero_based(i, n)?, zero_based(j, n)?, t)?
            }
            Element::Ps { i, phi } => state.phase_shift(zero_based(i, n)?, phi)?,
            Element::Loss { i, xi } => state.loss(zero_based(i, n)?, xi)?,
            Element::Disp { i, xs, ys } => state.displace(zero_based(i, n)?, xs, ys)?,
        };
    }
    Ok(state)
}

/// Scalar parameters of the reference three-mode experiment. Efficiencies are
/// intensities (the squares of the amplitude factors fed to the channel ops);
/// `g` is the feed-forward gain applied downstream by the detection stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupParams {
    /// Squeezing parameter of the EPR source.
    pub r: f64,
    /// Propagation intensity efficiency of the sender/receiver arms.
    pub xi1_sq: f64,
    /// Propagation intensity efficiency of the controller arm.
    pub xi2_sq: f64,
    /// Detector quantum efficiency (all photodiodes).
    pub eta_sq: f64,
    /// Feed-forward gain from the controller current to the sum current.
    pub g: f64,
}

impl Default for SetupParams {
    /// The measured operating point of the experiment.
    fn default() -> Self {
        Self {
            r: 0.674,
            xi1_sq: 0.987,
            xi2_sq: 0.937,
            eta_sq: 0.95,
            g: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

impl SetupParams {
    pub fn validate(&self) -> Result<(), GaussianError> {
        let checks = [
            ("r", self.r, 0.0, f64::INFINITY),
            ("xi1_sq", self.xi1_sq, 0.0, 1.0),
            ("xi2_sq", self.xi2_sq, 0.0, 1.0),
            ("eta_sq", self.eta_sq, 0.0, 1.0),
            ("g", self.g, 0.0, f64::INFINITY),
        ];
        for (name, value, lo, hi) in checks {
            if !value.is_finite() || value < lo || value > hi {
                return Err(GaussianError::ParamOutOfDomain { name, value });
            }
        }
        Ok(())
    }

    pub fn xi1(&self) -> f64 {
        self.xi1_sq.sqrt()
    }

    pub fn xi2(&self) -> f64 {
        self.xi2_sq.sqrt()
    }

    pub fn eta(&self) -> f64 {
        self.eta_sq.sqrt()
    }
}

/// Amplitude transmission of the first (unbalanced) splitter,
/// `sin(2*theta) = (1 + sqrt(2))/sqrt(6)` for the wave-plate angle
/// `theta = 45deg - arcsin((sqrt(2)-1)/sqrt(6))/2`.
pub fn primary_splitter_transmission() -> f64 {
    (1.0 + std::f64::consts::SQRT_2) / 6.0f64.sqrt()
}

/// Reflectivity of the first splitter, `cos(2*theta) = (sqrt(2)-1)/sqrt(6)`.
pub fn primary_splitter_reflection() -> f64 {
    (std::f64::consts::SQRT_2 - 1.0) / 6.0f64.sqrt()
}

/// Build the three-mode distribution network: a two-mode squeezer on modes
/// 1 and 2, the unbalanced wave-plate splitter, a 50/50 splitter against the
/// vacuum in mode 3, and the arm losses. Port orders are chosen so that mode
/// 1 carries the sender beam and the total amplitude sum `X1 + X2 + X3` is
/// the squeezed combination.
pub fn build_experiment_setup(params: &SetupParams) -> Result<CircuitSpec, GaussianError> {
    params.validate()?;
    let elements = vec![
        Element::Tms {
            i: 1,
            j: 2,
            r: params.r,
        },
        // Mixing [[t, rho], [-rho, t]] applied to ports (2, 1) leaves mode 1
        // as t*b1 - rho*b2; the opposite order would route the antisqueezed
        // amplitude combination into the three-mode sum.
        Element::Bs {
            i: 2,
            j: 1,
            t: primary_splitter_transmission(),
        },
        Element::Bs {
            i: 3,
            j: 2,
            t: std::f64::consts::FRAC_1_SQRT_2,
        },
        Element::Loss {
            i: 1,
            xi: params.xi1(),
        },
        Element::Loss {
            i: 2,
            xi: params.xi1(),
        },
        Element::Loss {
            i: 3,
            xi: params.xi2(),
        },
    ];
    let eta = params.eta();
    Ok(CircuitSpec {
        n_modes: 3,
        elements,
        detectors: vec![
            Detector::Bell { i: 1, j: 2, eta },
            Detector::XDet { i: 3, eta },
        ],
    })
}

/// Same setup with the sender displacement appended after the losses, so the
/// encoded signal is calibrated at the detection plane.
pub fn build_experiment_setup_with_signal(
    params: &SetupParams,
    xs: f64,
    ys: f64,
) -> Result<CircuitSpec, GaussianError> {
    let mut spec = build_experiment_setup(params)?;
    spec.elements.push(Element::Disp { i: 1, xs, ys });
    Ok(spec)
}
