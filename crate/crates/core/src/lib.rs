//! Constructive Ramsey-type results for countable homogeneous structures.
//!
//! Recursive presentations of the Rado graph, the complete graph and generic
//! ℓ-diagrams; copies of a finite structure β inside them, coloured by an
//! oracle bit string; and the greedy construction of an embedding of the
//! whole structure whose every β-copy has colour 1, with a certificate an
//! independent auditor can re-check.

pub mod ages;
pub mod bits;
pub mod dot;
pub mod encodings;
pub mod error;
pub mod limits;
pub mod monochrome;
pub mod ranked;
pub mod structure;

pub use ages::{
    disjoint_copy_sequence, enumerate_copies, is_base_fixing_copy, least_copy_avoiding, max_copy_index, CopyEntry, CopyEnumeration,
    CopyIndex, DisjointCopies,
};
pub use bits::{BitDescriptor, BitSource};
pub use encodings::{b_event, build_chain, extend_chain, Chain, ChainReport, EffectiveEncoding, IdentityEncoding};
pub use error::{Error, Result};
pub use limits::{
    check_homogeneity_sample, extension_witness, rado_adjacent, Constraint, ExtensionTask, LimitPresentation,
    PresentationDescriptor, Slot,
};
pub use monochrome::{
    audit_certificate, monochromatic_embedding, verify_certificate, EmbeddingCertificate, GreedyState, Verification,
};
pub use ranked::{
    bits_adjacent, check_rd_axioms, genericity_probe, prime_adjacent, prime_witness, psi, ExtensionInstance,
    PrimeTable, ProbeCaps, ProbeReport,
};
pub use structure::{
    decode_set, encode_set, find_isomorphism, induced, is_embedding, FinStructure, Mapping, Signature, StructureFile,
    Vertex, VertexSet,
};
