//! Wall-clock timing; a no-op without `std`.

#[cfg(feature = "std")]
#[derive(Debug)]
pub(crate) struct Stopwatch(std::time::Instant);

#[cfg(feature = "std")]
impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self(std::time::Instant::now())
    }

    pub(crate) fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(not(feature = "std"))]
#[derive(Debug)]
pub(crate) struct Stopwatch;

#[cfg(not(feature = "std"))]
impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self
    }

    pub(crate) fn seconds(&self) -> f64 {
        0.0
    }
}
