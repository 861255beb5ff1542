//! A training-loop client talking to the env over TCP.
//!
//! The server runs on a background thread here; against a separate process
//! start `uavsim serve --endpoint tcp:7777` and point the client at it.
//! The client sends uniform scores and zero velocities.
//!
//! cargo run --example protocol_tcp_client

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use iab_uav_sim::protocol::serve_listener;
use iab_uav_sim::ScenarioConfig;
use serde_json::{json, Value};

fn main() -> std::io::Result<()> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let cfg = ScenarioConfig { episode_len: 30, ..Default::default() };
    thread::spawn(move || serve_listener(cfg, listener));

    let stream = TcpStream::connect(addr)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    let mut call = |req: Value| -> std::io::Result<Value> {
        writeln!(writer, "{req}")?;
        let mut line = String::new();
        reader.read_line(&mut line)?;
        Ok(serde_json::from_str(&line).expect("server sends JSON"))
    };

    let hello = call(json!({"type": "hello", "id": 0}))?;
    println!("config {} block {} agents {}/{}", &hello["config_hash"].as_str().unwrap()[..12], hello["long_block"],
        hello["short_agents"].as_array().unwrap().len(), hello["long_agents"].as_array().unwrap().len());

    let mut obs = call(json!({"type": "reset", "id": 1, "seed": 5}))?;
    let mut total = 0.0;
    let mut id = 2;
    while !obs["done"].as_bool().unwrap() {
        let short: Vec<Value> = obs["eligible"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| json!({"scores": vec![1.0; e.as_array().unwrap().len()]}))
            .collect();
        let mut req = json!({"type": "step", "id": id, "short": short});
        if obs["long_required"].as_bool().unwrap() {
            let n = hello["long_agents"].as_array().unwrap().len();
            req["long"] = json!(vec![[0.0, 0.0]; n]);
        }
        let t = call(req)?;
        assert_eq!(t["type"], "transition", "{t}");
        total += t["global_short_reward"].as_f64().unwrap();
        if let Some(long) = t.get("long") {
            println!("slot {:>2}: block reward {}", t["slot"], long["global_reward"]);
        }
        obs = t["obs"].clone();
        id += 1;
    }
    println!("episode short reward {total}");
    println!("{}", call(json!({"type": "close", "id": id}))?);
    Ok(())
}
