//! CSV grid dumps and JSON state headers.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{KvNState, PhaseSpaceGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateHeader {
    pub grid: PhaseSpaceGrid,
    pub time: f64,
    pub norm: f64,
}

impl StateHeader {
    pub fn of(state: &KvNState) -> Self {
        StateHeader {
            grid: state.grid().clone(),
            time: state.time(),
            norm: state.norm(),
        }
    }
}

/// One row per grid point: `q,p,re_psi,im_psi,rho`.
pub fn write_csv<W: Write>(state: &KvNState, mut w: W) -> io::Result<()> {
    let g = state.grid();
    writeln!(w, "q,p,re_psi,im_psi,rho")?;
    for i in 0..g.n_q {
        for j in 0..g.n_p {
            let z = state.at(i, j);
            writeln!(
                w,
                "{},{},{},{},{}",
                g.q(i),
                g.p(j),
                z.re,
                z.im,
                z.norm_sqr()
            )?;
        }
    }
    Ok(())
}
