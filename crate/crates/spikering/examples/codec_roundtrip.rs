//! Wire-format walkthrough: encode and decode synapse packets and
//! four-packet bursts.
//!
//! ```text
//! cargo run --example codec_roundtrip
//! ```

use spikering::packet::{pack_stream, unpack_stream, SynapsePacket, SyncClass};

fn main() {
    let packets = [
        SynapsePacket::data(87.81, 1234, 15).unwrap(),
        SynapsePacket::data(-351.23, 99, 7).unwrap(),
        SynapsePacket::local_sync(3),
        SynapsePacket::global_sync(17),
        SynapsePacket::data(1.0, 5, 1).unwrap(),
    ];
    println!("{:<44} {:>18}", "packet", "64-bit word");
    for p in &packets {
        let word = p.encode();
        let back = SynapsePacket::decode(word);
        assert_eq!(back, *p);
        println!(
            "{:<44} 0x{word:016x}",
            format!("{:?} w={} dst={} delay={}", p.sync(), p.weight(), p.dst(), p.delay()),
        );
    }

    // Five packets burst into two 256-bit blocks; the padding filler is
    // invisible to consumers.
    let bursts = pack_stream(&packets);
    println!("\n{} packets -> {} bursts of 32 bytes", packets.len(), bursts.len());
    for (i, b) in bursts.iter().enumerate() {
        println!("burst {i}: {:02x?}", &b.to_le_bytes()[..16]);
    }
    let restored = unpack_stream(&bursts);
    assert_eq!(restored, packets);
    assert!(restored.iter().all(|p| p.sync() != SyncClass::Reserved));
    println!("round trip exact, {} packets restored", restored.len());
}
