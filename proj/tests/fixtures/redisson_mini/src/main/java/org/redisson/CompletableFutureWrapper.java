package org.redisson;

import java.util.concurrent.CompletionStage;

import org.redisson.api.RFuture;

public class CompletableFutureWrapper<V> implements RFuture<V> {

    private final CompletionStage<V> stage;

    public CompletableFutureWrapper(CompletionStage<V> stage) {
        this.stage = stage;
    }

    @Override
    public CompletionStage<V> toStage() {
        return stage;
    }
}
