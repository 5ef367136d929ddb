// SPDX-License-Identifier: Apache-2.0

//! Writes the synthetic fixture with a matching `run.conf`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use engagegraph::synthetic::{self, SyntheticCorpus, SyntheticParams};

pub const CONFIG_FILE: &str = "run.conf";
pub const DEFAULT_PIPELINE_SEED: u64 = 1;

pub fn run_conf(seed: u64) -> String {
    let lists: Vec<&str> = synthetic::name_list_csvs().into_iter().map(|(f, _)| f).collect();
    format!(
        "# Synthetic study corpus.\n\
         corpus = {tweets}\n\
         users = {users}\n\
         \n\
         stream.topics.kind = keyword\n\
         stream.topics.keywords = {keywords}\n\
         stream.orgs.kind = account\n\
         stream.orgs.accounts = {accounts}\n\
         \n\
         min_community_size = 40\n\
         k = 5\n\
         seed = {seed}\n\
         \n\
         gazetteer = {gaz}\n\
         name_lists = {lists}\n\
         name_training = {training}\n\
         formats = csv\n",
        tweets = synthetic::TWEETS_FILE,
        users = synthetic::USERS_FILE,
        keywords = SyntheticCorpus::keywords().join(", "),
        accounts = SyntheticCorpus::anchor_handles().join(", "),
        gaz = synthetic::GAZETTEER_FILE,
        lists = lists.join(", "),
        training = synthetic::TRAINING_FILE,
    )
}

/// Generates the corpus for `params` into `dir`; returns every file written.
pub fn write(dir: &Path, params: SyntheticParams, pipeline_seed: u64) -> io::Result<Vec<PathBuf>> {
    let corpus = synthetic::generate(params);
    let mut files = synthetic::write_fixture(&corpus, dir)?;
    let conf = dir.join(CONFIG_FILE);
    fs::write(&conf, run_conf(pipeline_seed))?;
    files.push(conf);
    Ok(files)
}
