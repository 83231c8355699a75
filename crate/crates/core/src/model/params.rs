use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Shapes of the three parameter tables. All tables live in one flat,
/// row-major buffer: entities (`nE × d`), relations (`nR × d`), then the
/// output projection (`nE × 3d`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamLayout {
    pub num_entities: usize,
    pub num_relations: usize,
    pub dim: usize,
}

impl ParamLayout {
    pub fn new(num_entities: usize, num_relations: usize, dim: usize) -> Result<Self> {
        if num_entities == 0 || num_relations == 0 {
            return Err(Error::invalid(format!(
                "need at least one entity and one relation (got {num_entities}, {num_relations})"
            )));
        }
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        Ok(Self {
            num_entities,
            num_relations,
            dim,
        })
    }

    pub fn input_dim(&self) -> usize {
        3 * self.dim
    }

    pub fn entity_len(&self) -> usize {
        self.num_entities * self.dim
    }

    pub fn relation_len(&self) -> usize {
        self.num_relations * self.dim
    }

    pub fn output_len(&self) -> usize {
        self.num_entities * self.input_dim()
    }

    pub fn len(&self) -> usize {
        self.entity_len() + self.relation_len() + self.output_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn entity_offset(&self, e: usize) -> usize {
        e * self.dim
    }

    pub(crate) fn relation_offset(&self, r: usize) -> usize {
        self.entity_len() + r * self.dim
    }

    pub(crate) fn output_offset(&self, o: usize) -> usize {
        self.entity_len() + self.relation_len() + o * self.input_dim()
    }

    pub(crate) fn check_ids(&self, s: usize, r: usize) -> Result<()> {
        if s >= self.num_entities {
            return Err(Error::invalid(format!(
                "entity id {s} out of range ({} entities)",
                self.num_entities
            )));
        }
        if r >= self.num_relations {
            return Err(Error::invalid(format!(
                "relation id {r} out of range ({} relations)",
                self.num_relations
            )));
        }
        Ok(())
    }
}

macro_rules! table_views {
    ($ty:ident) => {
        impl $ty {
            pub fn zeros(layout: ParamLayout) -> Self {
                Self {
                    layout,
                    values: vec![0.0; layout.len()],
                }
            }

            pub fn from_values(layout: ParamLayout, values: Vec<f64>) -> Result<Self> {
                if values.len() != layout.len() {
                    return Err(Error::shape(format!(
                        "{} values for a layout of {}",
                        values.len(),
                        layout.len()
                    )));
                }
                Ok(Self { layout, values })
            }

            pub fn layout(&self) -> ParamLayout {
                self.layout
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn entity(&self, e: usize) -> &[f64] {
                let o = self.layout.entity_offset(e);
                &self.values[o..o + self.layout.dim]
            }

            pub fn entity_mut(&mut self, e: usize) -> &mut [f64] {
                let o = self.layout.entity_offset(e);
                &mut self.values[o..o + self.layout.dim]
            }

            pub fn relation(&self, r: usize) -> &[f64] {
                let o = self.layout.relation_offset(r);
                &self.values[o..o + self.layout.dim]
            }

            pub fn relation_mut(&mut self, r: usize) -> &mut [f64] {
                let o = self.layout.relation_offset(r);
                &mut self.values[o..o + self.layout.dim]
            }

            pub fn output(&self, o: usize) -> &[f64] {
                let off = self.layout.output_offset(o);
                &self.values[off..off + self.layout.input_dim()]
            }

            pub fn output_mut(&mut self, o: usize) -> &mut [f64] {
                let off = self.layout.output_offset(o);
                let n = self.layout.input_dim();
                &mut self.values[off..off + n]
            }

            pub fn entity_table(&self) -> &[f64] {
                &self.values[..self.layout.entity_len()]
            }

            pub fn relation_table(&self) -> &[f64] {
                let start = self.layout.entity_len();
                &self.values[start..start + self.layout.relation_len()]
            }

            pub fn output_table(&self) -> &[f64] {
                &self.values[self.layout.entity_len() + self.layout.relation_len()..]
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }

            /// Euclidean norm over all tables.
            pub fn norm(&self) -> f64 {
                self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        }
    };
}

/// Entity, relation and output tables of the scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    layout: ParamLayout,
    values: Vec<f64>,
}

/// Gradient tables, laid out exactly like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    layout: ParamLayout,
    values: Vec<f64>,
}

table_views!(ModelParams);
table_views!(Grads);

impl ModelParams {
    /// `‖self − other‖₂` over all tables.
    pub fn distance(&self, other: &ModelParams) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::shape("parameter layouts differ"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

impl Grads {
    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Grads, scale: f64) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::shape("gradient layouts differ"));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Glorot-uniform bound for a `rows × cols` table.
pub(crate) fn glorot_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Draws each table uniformly from `[-b, b]` with its own Glorot bound.
pub fn init_params(
    dim: usize,
    num_entities: usize,
    num_relations: usize,
    seed: u64,
) -> Result<ModelParams> {
    let layout = ParamLayout::new(num_entities, num_relations, dim)?;
    let mut rng = rng::rng_for(seed, Stream::Init, &[]);
    let mut values = Vec::with_capacity(layout.len());
    for (rows, cols) in [
        (num_entities, dim),
        (num_relations, dim),
        (num_entities, 3 * dim),
    ] {
        let b = glorot_bound(rows, cols);
        values.extend((0..rows * cols).map(|_| rng.gen_range(-b..=b)));
    }
    Ok(ModelParams { layout, values })
}
