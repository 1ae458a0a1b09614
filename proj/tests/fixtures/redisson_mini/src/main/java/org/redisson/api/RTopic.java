package org.redisson.api;

public interface RTopic {

    RFuture<Long> publishAsync(Object message);
}
