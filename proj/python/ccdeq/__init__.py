import ccdeq  # placeholder until bindings land
