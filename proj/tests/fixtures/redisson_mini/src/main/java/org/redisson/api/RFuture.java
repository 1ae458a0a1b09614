package org.redisson.api;

import java.util.concurrent.CompletionStage;

public interface RFuture<V> {

    CompletionStage<V> toStage();
}
