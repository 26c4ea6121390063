#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn sinet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinet"))
        .args(args)
        .current_dir(dir)
        .env_remove("SINET_LEDGER")
        .env_remove("SINET_CONFIG")
        .output()
        .expect("binary runs")
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Two disjoint triangles labelled red and blue, plus a small instance table.
pub fn two_clique_bundle(dir: &Path) {
    write(dir, "graph.csv", "actor_a,actor_b,weight\na,b,1\na,c,1\nb,c,1\nd,e,1\nd,f,1\ne,f,1\n");
    write(dir, "graph.csv.meta", "format_version = 1\nweighting_mode = COUNT\n");
    write(
        dir,
        "attributes.csv",
        "actor,attribute,value\na,lab,red\nb,lab,red\nc,lab,red\nd,lab,blue\ne,lab,blue\nf,lab,blue\na,role,prof\nd,role,prof\n",
    );
    let mut inst = String::from("tag0,tag1,x,y\n");
    for i in 0..40 {
        let t0 = if i % 2 == 0 { "1" } else { "" };
        let t1 = if i % 3 == 0 { "1" } else { "" };
        let x = i as f64;
        let y = if t0 == "1" { x } else { -x + (i % 5) as f64 };
        inst.push_str(&format!("{t0},{t1},{x},{y}\n"));
    }
    write(dir, "instances.csv", &inst);
}
