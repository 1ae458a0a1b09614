package org.redisson.command;

import java.util.concurrent.CompletableFuture;

public class RedisCommonBatchExecutor {
    private final Entry entry;
    private final BatchOptions options;

    public RedisCommonBatchExecutor() {
        this.entry = new Entry();
        this.options = BatchOptions.defaults();
    }

    private static int timeout(ConnectionManager connectionManager, BatchOptions options) {
        int result = connectionManager.getConfig().getTimeout();
        if (options.getResponseTimeout() > 0) {
            result = (int) options.getResponseTimeout();
        }
        return result;
    }

    private static int retryInterval(ConnectionManager connectionManager, BatchOptions options) {
        if (options.getRetryInterval() > 0) {
            return (int) options.getRetryInterval();
        }
        return connectionManager.getConfig().getRetryInterval();
    }

    private static int retryAttempts(ConnectionManager connectionManager, BatchOptions options) {
        if (options.getRetryAttempts() >= 0) {
            return options.getRetryAttempts();
        }
        return connectionManager.getConfig().getRetryAttempts();
    }

    @Override
    protected void sendCommand(CompletableFuture<Void> attemptPromise, RedisConnection connection) {
        connection.send(entry.getCommands(), options);
        attemptPromise.complete(null);
    }
}
