use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the formula.
    Domain { what: &'static str, value: f64 },
    /// Two grids that must be paired have different shapes.
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    /// A tunable is outside its admissible range.
    Config(&'static str),
    /// Grid shape or buffer length is unusable.
    Shape(&'static str),
    /// Fields are smaller than the SSIM window.
    WindowTooLarge { window: usize, height: usize, width: usize },
    /// No element survived masking, so a mean is undefined.
    EmptyMask,
    /// The scene split needs at least ten scenes.
    TooFewScenes { scenes: usize },
    /// The residual does not depend on the extinction coefficient.
    Identifiability,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Shape(msg) => write!(f, "invalid shape: {msg}"),
            Error::WindowTooLarge { window, height, width } => {
                write!(f, "{height}x{width} field is smaller than the {window}x{window} window")
            }
            Error::EmptyMask => f.write_str("no valid elements to average"),
            Error::TooFewScenes { scenes } => {
                write!(f, "a 7:2:1 scene split needs at least 10 scenes, got {scenes}")
            }
            Error::Identifiability => {
                f.write_str("fog parameters are not identifiable: residual is flat in beta")
            }
        }
    }
}

impl core::error::Error for Error {}
