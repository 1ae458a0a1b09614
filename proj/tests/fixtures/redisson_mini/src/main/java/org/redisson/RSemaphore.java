package org.redisson;

import org.redisson.api.RFuture;

public interface RSemaphore {

    RFuture<Void> acquireAsync(int permits);

    RFuture<Boolean> deleteAsync();
}
