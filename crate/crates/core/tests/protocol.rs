mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use common::desk_config;
use iab_uav_sim::protocol::{serve_listener, serve_stream, Session};
use iab_uav_sim::Env;
use serde_json::{json, Value};

fn call(s: &mut Session, req: Value) -> Value {
    serde_json::from_str(&s.handle_line(&req.to_string())).unwrap()
}

fn idle_step(obs: &Value, n_nodes: usize) -> Value {
    let short: Vec<Value> = obs["eligible"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| json!({ "mask": vec![false; e.as_array().unwrap().len()] }))
        .collect();
    let mut req = json!({"type": "step", "short": short});
    if obs["long_required"].as_bool().unwrap() {
        req["long"] = json!(vec![[0.0, 0.0]; n_nodes]);
    }
    req
}

#[test]
fn hello_describes_the_agents() {
    let cfg = desk_config();
    let mut s = Session::new(cfg.clone()).unwrap();
    let h = call(&mut s, json!({"type": "hello", "id": 7}));
    assert_eq!(h["type"], "hello");
    assert_eq!(h["id"], 7);
    assert_eq!(h["protocol_version"], 1);
    assert_eq!(h["config_hash"], cfg.hash());
    assert_eq!(h["long_block"], 5);
    assert_eq!(h["episode_len"], 40);
    let shorts = h["short_agents"].as_array().unwrap();
    assert_eq!(shorts.len(), 3);
    assert_eq!(shorts[0]["sched_limit"], 3);
    assert_eq!(shorts[1]["sched_limit"], 2);
    let longs = h["long_agents"].as_array().unwrap();
    assert_eq!(longs.len(), 2);
    assert_eq!(longs[0]["action_dim"], 2);
    assert_eq!(longs[0]["v_max"], 10.0);
}

#[test]
fn error_codes() {
    let mut s = Session::new(desk_config()).unwrap();
    let r = call(&mut s, json!({"type": "step", "id": "a", "short": []}));
    assert_eq!((r["type"].as_str(), r["code"].as_str(), &r["id"]), (Some("error"), Some("NOT_RESET"), &json!("a")));

    let r: Value = serde_json::from_str(&s.handle_line("{not json")).unwrap();
    assert_eq!(r["code"], "BAD_REQUEST");
    assert_eq!(r["id"], Value::Null);
    assert_eq!(call(&mut s, json!({"type": "teleport"}))["code"], "BAD_REQUEST");
    assert_eq!(call(&mut s, json!({"type": "reset"}))["code"], "BAD_REQUEST");

    let obs = call(&mut s, json!({"type": "reset", "seed": 1}));
    let mut step = idle_step(&obs, 2);
    step.as_object_mut().unwrap().remove("long");
    assert_eq!(call(&mut s, step)["code"], "LONG_ACTION_PHASE");
    let mut step = idle_step(&obs, 2);
    step["short"][0] = json!({"mask": [true, true, true, true, true, true]});
    assert_eq!(call(&mut s, step)["code"], "INVALID_ACTION");
}

#[test]
fn unknown_fields_are_ignored() {
    let mut s = Session::new(desk_config()).unwrap();
    let r = call(&mut s, json!({"type": "reset", "seed": 3, "trainer_run": "abc", "extra": [1, 2]}));
    assert_eq!(r["type"], "obs");
    assert_eq!(r["slot"], 0);
}

#[test]
fn reset_replays_and_floats_round_trip() {
    let cfg = desk_config();
    let mut s = Session::new(cfg.clone()).unwrap();
    let a = s.handle_line(r#"{"type":"reset","seed":21}"#);
    let b = s.handle_line(r#"{"type":"reset","seed":21}"#);
    assert_eq!(a, b);

    let mut env = Env::new(cfg).unwrap();
    let obs = env.reset(21).unwrap();
    let wire: Value = serde_json::from_str(&a).unwrap();
    for (k, o) in obs.short.iter().enumerate() {
        let got: Vec<f64> = wire["short"][k].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        let want = o.to_flat();
        assert_eq!(got.len(), want.len());
        assert!(got.iter().zip(&want).all(|(g, w)| g.to_bits() == w.to_bits()));
    }
    for (k, o) in obs.long.iter().enumerate() {
        let got: Vec<f64> = wire["long"][k].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!(got.iter().zip(o.to_flat()).all(|(g, w)| g.to_bits() == w.to_bits()));
    }
}

#[test]
fn full_episode_until_done() {
    let mut s = Session::new(desk_config()).unwrap();
    let mut obs = call(&mut s, json!({"type": "reset", "seed": 4}));
    let mut steps = 0;
    let mut blocks = 0;
    while !obs["done"].as_bool().unwrap() {
        let t = call(&mut s, idle_step(&obs, 2));
        assert_eq!(t["type"], "transition", "{t}");
        assert_eq!(t["slot"], steps);
        if t.get("long").is_some() {
            blocks += 1;
        }
        obs = t["obs"].clone();
        steps += 1;
    }
    assert_eq!((steps, blocks), (40, 8));
    assert_eq!(call(&mut s, idle_step(&obs, 2))["code"], "EPISODE_DONE");
    assert_eq!(call(&mut s, json!({"type": "obs"}))["done"], true);
}

#[test]
fn batch_addresses_independent_envs() {
    let mut s = Session::new(desk_config()).unwrap();
    let r = call(
        &mut s,
        json!({"type": "batch", "id": 1, "requests": [
            {"type": "reset", "seed": 1},
            {"type": "reset", "seed": 2},
            {"type": "reset", "seed": 1, "env": 2}
        ]}),
    );
    let rs = r["responses"].as_array().unwrap();
    assert_eq!(rs.len(), 3);
    assert_eq!(rs[0], rs[2]);
    assert_ne!(rs[0], rs[1]);

    let step = idle_step(&rs[0], 2);
    let r = call(&mut s, json!({"type": "batch", "requests": [step.clone(), {"type": "obs"}, step]}));
    let rs = r["responses"].as_array().unwrap();
    assert_eq!(rs[0]["type"], "transition");
    assert_eq!(rs[1]["slot"], 0);
    assert_eq!(rs[2]["slot"], 0);
    assert_eq!(rs[0]["obs"], rs[2]["obs"]);

    let nested = call(&mut s, json!({"type": "batch", "requests": [{"type": "batch", "requests": []}]}));
    assert_eq!(nested["responses"][0]["code"], "BAD_REQUEST");
    let far = call(&mut s, json!({"type": "obs", "env": 100000}));
    assert_eq!(far["code"], "BAD_REQUEST");
}

#[test]
fn stream_stops_at_close() {
    let input = b"{\"type\":\"hello\",\"id\":1}\n\n{\"type\":\"close\",\"id\":2}\n{\"type\":\"hello\",\"id\":3}\n";
    let mut out = Vec::new();
    serve_stream(desk_config(), &input[..], &mut out).unwrap();
    let lines: Vec<Value> = String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], json!({"type": "close", "id": 2}));
}

#[test]
fn tcp_sessions_are_isolated() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || serve_listener(desk_config(), listener));

    let connect = || {
        let stream = TcpStream::connect(addr).unwrap();
        (BufReader::new(stream.try_clone().unwrap()), stream)
    };
    let rpc = |io: &mut (BufReader<TcpStream>, TcpStream), req: &str| -> Value {
        writeln!(io.1, "{req}").unwrap();
        let mut line = String::new();
        io.0.read_line(&mut line).unwrap();
        serde_json::from_str(&line).unwrap()
    };
    let mut a = connect();
    let mut b = connect();
    let obs = rpc(&mut a, r#"{"type":"reset","seed":5}"#);
    assert_eq!(obs["type"], "obs");
    assert_eq!(rpc(&mut b, r#"{"type":"obs"}"#)["code"], "NOT_RESET");
    let t = rpc(&mut a, &idle_step(&obs, 2).to_string());
    assert_eq!(t["type"], "transition");
    assert_eq!(rpc(&mut a, r#"{"type":"close","id":"bye"}"#)["id"], "bye");
}
