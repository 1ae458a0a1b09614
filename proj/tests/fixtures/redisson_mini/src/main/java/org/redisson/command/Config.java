package org.redisson.command;

public class Config {

    private int timeout = 3000;
    private int retryInterval = 1500;
    private int retryAttempts = 3;

    public int getTimeout() {
        return timeout;
    }

    public int getRetryInterval() {
        return retryInterval;
    }

    public int getRetryAttempts() {
        return retryAttempts;
    }
}
