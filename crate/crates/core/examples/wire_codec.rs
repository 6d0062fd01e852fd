//! Encodes a few messages, prints the frames in hex and decodes them back.
//!
//!     cargo run --example wire_codec

use gymgate::protocol::{decode_frame, encode_frame, Envelope, MakeRequest, Message};
use gymgate::world::{Action, ChannelType, DiscreteAction, Observation};

fn show(envelope: Envelope) -> Result<(), Box<dyn std::error::Error>> {
    let frame = encode_frame(&envelope)?;
    let header_len = u32::from_be_bytes(frame[4..8].try_into()?) as usize;
    println!("{} ({} bytes)", envelope.message.type_name(), frame.len());
    println!("  prefix  {}", hex::encode(&frame[..8]));
    println!(
        "  header  {}",
        String::from_utf8_lossy(&frame[8..8 + header_len])
    );
    println!("  blob    {} bytes", frame.len() - 8 - header_len);
    assert_eq!(decode_frame(&frame)?, envelope);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    show(Envelope::new(1, Message::Heartbeat))?;
    show(Envelope::new(
        2,
        Message::Make(MakeRequest {
            env_name: "OffWorldMonolithDiscreteSim-v0".into(),
            experiment_name: Some("demo".into()),
            resume_experiment: false,
            channel_type: ChannelType::DepthOnly,
            seed: None,
        }),
    ))?;
    show(Envelope::new(
        3,
        Message::Step {
            env_handle: 1,
            action: Action::Discrete(DiscreteAction::Forward),
        },
    ))?;
    let obs = Observation::new(
        ChannelType::DepthOnly,
        320,
        240,
        Some(vec![1500; 320 * 240]),
        None,
    )?;
    show(Envelope::new(3, Message::ResetOk { observation: obs }))?;
    Ok(())
}
