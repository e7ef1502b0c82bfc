//! Binary CZI channels and their two-letter product channels.
//!
//! A channel is stored as `m[x1][x2] = P(Y1 = 0 | X1 = x1, X2 = x2)`. The
//! second receiver sees `Y2 = X2` and needs no stored data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct CziChannel {
    m: [[f64; 2]; 2],
}

/// Canonical JSON form `{"q": [[a, b], [c, d]]}`, row = x1, column = x2.
#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    q: [[f64; 2]; 2],
}

impl TryFrom<ChannelRepr> for CziChannel {
    type Error = Error;

    fn try_from(repr: ChannelRepr) -> Result<Self> {
        CziChannel::new(repr.q)
    }
}

impl From<CziChannel> for ChannelRepr {
    fn from(ch: CziChannel) -> Self {
        ChannelRepr { q: ch.m }
    }
}

impl CziChannel {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        validate_channel(&[m[0][0], m[0][1], m[1][0], m[1][1]])
    }

    /// The channel whose output is independent of both inputs and uniform.
    pub fn uniform_noise() -> Self {
        CziChannel { m: [[0.5; 2]; 2] }
    }

    /// `P(Y1 = 0 | x1, x2)`.
    #[inline]
    pub fn p_y0(&self, x1: usize, x2: usize) -> f64 {
        self.m[x1][x2]
    }

    /// Output law `[P(Y1 = 0), P(Y1 = 1)]` for a fixed input pair.
    #[inline]
    pub fn law(&self, x1: usize, x2: usize) -> [f64; 2] {
        let p0 = self.m[x1][x2];
        [p0, 1.0 - p0]
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.m
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> [f64; 4] {
        [self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]
    }

    /// Relabels `X1` (swaps the rows).
    pub fn swap_x1_labels(&self) -> Self {
        CziChannel {
            m: [self.m[1], self.m[0]],
        }
    }

    /// Relabels `X2` (swaps the columns).
    pub fn swap_x2_labels(&self) -> Self {
        let m = self.m;
        CziChannel {
            m: [[m[0][1], m[0][0]], [m[1][1], m[1][0]]],
        }
    }

    pub fn product(&self) -> TwoLetterChannel {
        product_channel(self)
    }
}

/// Builds a channel from four row-major entries, rejecting anything outside
/// `[0, 1]` (including NaN).
pub fn validate_channel(entries: &[f64]) -> Result<CziChannel> {
    if entries.len() != 4 {
        return Err(Error::ChannelArity {
            expected: 4,
            got: entries.len(),
        });
    }
    for (index, &value) in entries.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ChannelEntry { index, value });
        }
    }
    Ok(CziChannel {
        m: [[entries[0], entries[1]], [entries[2], entries[3]]],
    })
}

impl FromStr for CziChannel {
    type Err = Error;

    /// Parses `a,b,c,d` (row-major decimals).
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .enumerate()
            .map(|(index, text)| {
                text.trim().parse::<f64>().map_err(|_| Error::ChannelParse {
                    index,
                    text: text.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        validate_channel(&entries)
    }
}

impl fmt::Display for CziChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.entries();
        write!(f, "[[{}, {}], [{}, {}]]", e[0], e[1], e[2], e[3])
    }
}

/// Index of a symbol pair `(first, second)` in `{0,1}^2`.
#[inline]
pub const fn pair_index(first: usize, second: usize) -> usize {
    2 * first + second
}

/// Two uses of a CZI channel seen as one channel from `(X1-pair, X2-pair)`
/// to the `Y1`-pair.
///
/// `t[x1_pair][x2_pair][y_pair]`, every pair indexed by [`pair_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLetterChannel {
    t: [[[f64; 4]; 4]; 4],
}

impl TwoLetterChannel {
    /// `P(y11, y12 | x11, x12, x21, x22)` with pairs given by index.
    #[inline]
    pub fn prob(&self, x1_pair: usize, x2_pair: usize, y_pair: usize) -> f64 {
        self.t[x1_pair][x2_pair][y_pair]
    }

    /// Output law over the four `Y1`-pairs for a fixed input.
    #[inline]
    pub fn law(&self, x1_pair: usize, x2_pair: usize) -> &[f64; 4] {
        &self.t[x1_pair][x2_pair]
    }
}

pub fn product_channel(ch: &CziChannel) -> TwoLetterChannel {
    let mut t = [[[0.0; 4]; 4]; 4];
    for x11 in 0..2 {
        for x12 in 0..2 {
            for x21 in 0..2 {
                for x22 in 0..2 {
                    let first = ch.law(x11, x21);
                    let second = ch.law(x12, x22);
                    let row = &mut t[pair_index(x11, x12)][pair_index(x21, x22)];
                    for y11 in 0..2 {
                        for y12 in 0..2 {
                            row[pair_index(y11, y12)] = first[y11] * second[y12];
                        }
                    }
                }
            }
        }
    }
    TwoLetterChannel { t }
}
