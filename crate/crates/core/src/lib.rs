//! MFSK modem workbench: JT65A-style tone synthesis, a calibrated AWGN
//! channel, a non-coherent FFT demodulator, a small CNN demodulator and
//! the closed-form error rates they are checked against.

pub mod dataset;
pub mod dsp;
pub mod eval;
pub mod neural;
pub mod signal;
pub mod theory;
