//! Bit-exact codec for the 64-bit synapse/sync packet and 256-bit bursts.
//!
//! Wire layout (also the on-disk representation, serialized little-endian):
//!
//! ```text
//! bits 63..32   synaptic weight, IEEE-754 single-precision bit pattern
//! bits 31..30   sync class (DATA / LOCAL_SYNC / GLOBAL_SYNC / RESERVED)
//! bits 29..8    destination neuron ID (22 bits)
//! bits  7..0    delay in timesteps (8 bits)
//! ```
//!
//! Sync tokens reuse the destination field to carry the originating core ID.

use thiserror::Error;

/// Width of the destination field.
pub const DST_BITS: u32 = 22;
/// Largest encodable destination neuron ID.
pub const MAX_DST: u32 = (1 << DST_BITS) - 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PacketError {
    #[error("destination {0} exceeds the {DST_BITS}-bit field")]
    DstOutOfRange(u32),
}

/// Synchronization class carried in the 2-bit sync field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SyncClass {
    /// Ordinary synaptic-weight packet.
    Data = 0b00,
    /// Inserted after each spiking neuron's synapse list; paces the fetch
    /// stage and never leaves the core.
    LocalSync = 0b01,
    /// Per-core end-of-timestep marker; circulates the full ring.
    GlobalSync = 0b10,
    /// Filler for padded bursts; ignored by consumers.
    Reserved = 0b11,
}

impl SyncClass {
    #[inline]
    pub fn from_bits(bits: u64) -> Self {
        match bits & 0b11 {
            0b00 => SyncClass::Data,
            0b01 => SyncClass::LocalSync,
            0b10 => SyncClass::GlobalSync,
            _ => SyncClass::Reserved,
        }
    }
}

/// One 64-bit synapse or synchronization packet.
///
/// Equality and hashing compare the weight's *bit pattern*, so NaN payloads
/// survive round-trips and compare equal to themselves.
#[derive(Debug, Clone, Copy)]
pub struct SynapsePacket {
    weight: f32,
    sync: SyncClass,
    dst: u32,
    delay: u8,
}

impl PartialEq for SynapsePacket {
    fn eq(&self, other: &Self) -> bool {
        self.weight.to_bits() == other.weight.to_bits()
            && self.sync == other.sync
            && self.dst == other.dst
            && self.delay == other.delay
    }
}

impl Eq for SynapsePacket {}

impl std::hash::Hash for SynapsePacket {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.weight.to_bits().hash(state);
        (self.sync as u8).hash(state);
        self.dst.hash(state);
        self.delay.hash(state);
    }
}

impl SynapsePacket {
    pub fn new(weight: f32, sync: SyncClass, dst: u32, delay: u8) -> Result<Self, PacketError> {
        if dst > MAX_DST {
            return Err(PacketError::DstOutOfRange(dst));
        }
        Ok(Self { weight, sync, dst, delay })
    }

    /// Synaptic-weight packet.
    pub fn data(weight: f32, dst: u32, delay: u8) -> Result<Self, PacketError> {
        Self::new(weight, SyncClass::Data, dst, delay)
    }

    /// End-of-list token; the dst field carries the originating core.
    pub fn local_sync(origin_core: u32) -> Self {
        Self::new(0.0, SyncClass::LocalSync, origin_core, 0)
            .expect("core ID exceeds destination field")
    }

    /// End-of-timestep token; the dst field carries the originating core.
    pub fn global_sync(origin_core: u32) -> Self {
        Self::new(0.0, SyncClass::GlobalSync, origin_core, 0)
            .expect("core ID exceeds destination field")
    }

    /// Padding packet for partial bursts.
    pub fn reserved_filler() -> Self {
        Self { weight: 0.0, sync: SyncClass::Reserved, dst: 0, delay: 0 }
    }

    #[inline]
    pub fn weight(&self) -> f32 {
        self.weight
    }

    #[inline]
    pub fn sync(&self) -> SyncClass {
        self.sync
    }

    #[inline]
    pub fn dst(&self) -> u32 {
        self.dst
    }

    /// Originating core of a sync token (alias of the dst field).
    #[inline]
    pub fn origin(&self) -> u32 {
        self.dst
    }

    #[inline]
    pub fn delay(&self) -> u8 {
        self.delay
    }

    /// Assemble the 64-bit wire word.
    #[inline]
    pub fn encode(&self) -> u64 {
        (self.weight.to_bits() as u64) << 32
            | (self.sync as u64) << 30
            | (self.dst as u64) << 8
            | self.delay as u64
    }

    /// Inverse of [`encode`](Self::encode); every word decodes.
    #[inline]
    pub fn decode(word: u64) -> Self {
        Self {
            weight: f32::from_bits((word >> 32) as u32),
            sync: SyncClass::from_bits(word >> 30),
            dst: ((word >> 8) & MAX_DST as u64) as u32,
            delay: (word & 0xff) as u8,
        }
    }
}

/// Field accessors on raw words, for hot paths that keep packets encoded.
pub mod word {
    use super::{SyncClass, MAX_DST};

    #[inline]
    pub fn sync(w: u64) -> SyncClass {
        SyncClass::from_bits(w >> 30)
    }

    #[inline]
    pub fn dst(w: u64) -> u32 {
        ((w >> 8) & MAX_DST as u64) as u32
    }

    #[inline]
    pub fn delay(w: u64) -> u8 {
        (w & 0xff) as u8
    }

    #[inline]
    pub fn weight(w: u64) -> f32 {
        f32::from_bits((w >> 32) as u32)
    }
}

/// One 256-bit transfer: four packets per transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Burst(pub [u64; 4]);

impl Burst {
    pub fn to_le_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, w) in self.0.iter().enumerate() {
            out[i * 8..(i + 1) * 8].copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8; 32]) -> Self {
        let mut words = [0u64; 4];
        for (i, w) in words.iter_mut().enumerate() {
            *w = u64::from_le_bytes(bytes[i * 8..(i + 1) * 8].try_into().unwrap());
        }
        Burst(words)
    }
}

/// Group exactly four packets into one burst.
pub fn pack_burst(packets: &[SynapsePacket; 4]) -> Burst {
    Burst([
        packets[0].encode(),
        packets[1].encode(),
        packets[2].encode(),
        packets[3].encode(),
    ])
}

/// Split a burst back into its four packets (fillers included).
pub fn unpack_burst(burst: &Burst) -> [SynapsePacket; 4] {
    [
        SynapsePacket::decode(burst.0[0]),
        SynapsePacket::decode(burst.0[1]),
        SynapsePacket::decode(burst.0[2]),
        SynapsePacket::decode(burst.0[3]),
    ]
}

/// Group an arbitrary packet sequence into bursts, padding the final partial
/// burst with RESERVED fillers.
pub fn pack_stream(packets: &[SynapsePacket]) -> Vec<Burst> {
    let mut bursts = Vec::with_capacity(packets.len().div_ceil(4));
    for chunk in packets.chunks(4) {
        let mut four = [SynapsePacket::reserved_filler(); 4];
        four[..chunk.len()].copy_from_slice(chunk);
        bursts.push(pack_burst(&four));
    }
    bursts
}

/// Inverse of [`pack_stream`]: flatten bursts and drop RESERVED fillers.
pub fn unpack_stream(bursts: &[Burst]) -> Vec<SynapsePacket> {
    bursts
        .iter()
        .flat_map(unpack_burst)
        .filter(|p| p.sync() != SyncClass::Reserved)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_packet_encodes_to_zero_word() {
        let p = SynapsePacket::data(0.0, 0, 0).unwrap();
        assert_eq!(p.encode(), 0x0000_0000_0000_0000);
        assert_eq!(SynapsePacket::decode(0), p);
    }

    #[test]
    fn known_word_layout() {
        // 1.0f32 = 0x3F800000, sync DATA, dst 5, delay 1; assembled by
        // independent bit arithmetic.
        let expect = (0x3F80_0000u64 << 32) | (5u64 << 8) | 1;
        assert_eq!(expect, 0x3F80_0000_0000_0501);
        let p = SynapsePacket::data(1.0, 5, 1).unwrap();
        assert_eq!(p.encode(), 0x3F80_0000_0000_0501);
        let d = SynapsePacket::decode(0x3F80_0000_0000_0501);
        assert_eq!(d.weight(), 1.0);
        assert_eq!(d.sync(), SyncClass::Data);
        assert_eq!(d.dst(), 5);
        assert_eq!(d.delay(), 1);
    }

    #[test]
    fn boundary_fields_round_trip() {
        let p = SynapsePacket::new(-3.75, SyncClass::GlobalSync, MAX_DST, 255).unwrap();
        assert_eq!(SynapsePacket::decode(p.encode()), p);
    }

    #[test]
    fn dst_out_of_range_rejected() {
        assert_eq!(
            SynapsePacket::data(1.0, MAX_DST + 1, 1),
            Err(PacketError::DstOutOfRange(MAX_DST + 1))
        );
    }

    #[test]
    fn nan_weight_bits_survive() {
        let nan = f32::from_bits(0x7fc0_1234);
        let p = SynapsePacket::data(nan, 9, 3).unwrap();
        let q = SynapsePacket::decode(p.encode());
        assert_eq!(q.weight().to_bits(), 0x7fc0_1234);
        assert_eq!(p, q);
    }

    #[test]
    fn burst_of_zero_packets_is_zero_block() {
        let z = SynapsePacket::data(0.0, 0, 0).unwrap();
        let b = pack_burst(&[z; 4]);
        assert_eq!(b.to_le_bytes(), [0u8; 32]);
    }

    #[test]
    fn partial_burst_padding_is_invisible() {
        let ps = vec![
            SynapsePacket::data(1.0, 1, 1).unwrap(),
            SynapsePacket::data(2.0, 2, 2).unwrap(),
            SynapsePacket::data(3.0, 3, 3).unwrap(),
        ];
        let bursts = pack_stream(&ps);
        assert_eq!(bursts.len(), 1);
        assert_eq!(unpack_stream(&bursts), ps);
    }

    fn arb_packet() -> impl Strategy<Value = SynapsePacket> {
        (any::<u32>(), 0u8..4, 0..=MAX_DST, any::<u8>()).prop_map(|(wbits, s, dst, delay)| {
            SynapsePacket::new(f32::from_bits(wbits), SyncClass::from_bits(s as u64), dst, delay)
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn round_trip_identity(p in arb_packet()) {
            prop_assert_eq!(SynapsePacket::decode(p.encode()), p);
        }

        #[test]
        fn encoding_is_injective(a in arb_packet(), b in arb_packet()) {
            if a != b {
                prop_assert_ne!(a.encode(), b.encode());
            }
        }

        #[test]
        fn burst_preserves_order(ps in proptest::collection::vec(arb_packet(), 4)) {
            let four: [SynapsePacket; 4] = [ps[0], ps[1], ps[2], ps[3]];
            let back = unpack_burst(&pack_burst(&four));
            prop_assert_eq!(back.to_vec(), ps);
            let bytes = pack_burst(&four).to_le_bytes();
            prop_assert_eq!(Burst::from_le_bytes(&bytes), pack_burst(&four));
        }
    }
}
